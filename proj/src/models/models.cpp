#include "wipe/models/models.hpp"

#include "wipe/nn/checkpoint.hpp"
#include "wipe/nn/loss.hpp"

#include <chrono>
#include <numeric>
#include <sstream>

namespace wipe {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

MatrixXd reshaped(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols)
{
    return Eigen::Map<const MatrixXd>(m.data(), rows, cols);
}

void append(std::vector<VectorMap<double>>& out, DenseLayer<double>& l)
{
    out.push_back(flat(l.weights));
    out.push_back(flat(l.bias));
}

void append(std::vector<VectorMap<double>>& out, DenseGrad<double>& g)
{
    out.push_back(flat(g.weights));
    out.push_back(flat(g.bias));
}

void check_finite(double loss, int epoch, TrainReport& r)
{
    if (!std::isfinite(loss)) {
        r.final_loss = loss;
        throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch), r);
    }
}

} // namespace

std::string TrainReport::to_csv() const
{
    std::ostringstream s;
    s << "epoch,loss";
    if (!recon.empty())
        s << ",recon,kl";
    s << '\n';
    for (std::size_t i = 0; i < losses.size(); ++i) {
        s << i + 1 << ',' << format_double(losses[i]);
        if (!recon.empty())
            s << ',' << format_double(recon[i]) << ',' << format_double(kl[i]);
        s << '\n';
    }
    return s.str();
}

nlohmann::json to_json(const ModelStats& s)
{
    return {{"ft_exp", to_json(s.ft_exp)}, {"ft_demo", to_json(s.ft_demo)}, {"xy", to_json(s.xy)}, {"dh", to_json(s.dh)}};
}

ModelStats model_stats_from_json(const nlohmann::json& j)
{
    ModelStats s;
    s.ft_exp = norm_stats_from_json(j.at("ft_exp"));
    s.ft_demo = norm_stats_from_json(j.at("ft_demo"));
    s.xy = norm_stats_from_json(j.at("xy"));
    s.dh = norm_stats_from_json(j.at("dh"));
    return s;
}

void fit_demo_stats(ModelStats& s, const std::vector<Demonstration>& demos)
{
    require(!demos.empty(), "fit_demo_stats: no demonstrations");
    const Eigen::Index n = demos.front().ft.rows();
    MatrixXd ft(n * static_cast<Eigen::Index>(demos.size()), 6);
    MatrixXd xy(n * static_cast<Eigen::Index>(demos.size()), 2);
    MatrixXd dh((n - 1) * static_cast<Eigen::Index>(demos.size()), 1);
    for (std::size_t i = 0; i < demos.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        ft.middleRows(k * n, n) = demos[i].ft;
        xy.middleRows(k * n, n) = demos[i].xy;
        dh.middleRows(k * (n - 1), n - 1) = demos[i].dh.tail(n - 1);
    }
    s.ft_demo = fit_norm_stats(ft);
    s.xy = fit_norm_stats(xy);
    s.dh = fit_norm_stats(dh);
}

// ------------------------------------------------------------------ VAE

std::vector<VectorMap<double>> SpongeVAE::parameters()
{
    std::vector<VectorMap<double>> p;
    append(p, enc_step);
    append(p, enc_head);
    append(p, dec_expand);
    append(p, dec_step);
    return p;
}

SpongeVAE make_vae(Rng& rng, int steps, int latent_dim)
{
    SpongeVAE v;
    v.steps = steps;
    v.latent_dim = latent_dim;
    v.enc_step = make_dense<double>(6, 5, Activation::none, rng);
    v.enc_head = make_dense<double>(5 * steps, 2 * latent_dim, Activation::none, rng);
    v.dec_expand = make_dense<double>(latent_dim, 5 * steps, Activation::relu, rng);
    v.dec_step = make_dense<double>(5, 6, Activation::none, rng);
    return v;
}

VaeGrad::VaeGrad(const SpongeVAE& v)
    : enc_step(v.enc_step)
    , enc_head(v.enc_head)
    , dec_expand(v.dec_expand)
    , dec_step(v.dec_step)
{
}

std::vector<VectorMap<double>> VaeGrad::parameters()
{
    std::vector<VectorMap<double>> p;
    append(p, enc_step);
    append(p, enc_head);
    append(p, dec_expand);
    append(p, dec_step);
    return p;
}

void vae_encode(const SpongeVAE& vae, const MatrixXd& x, MatrixXd& mu, MatrixXd& logvar)
{
    require(x.cols() == 6 * vae.steps, "vae_encode: expected " + std::to_string(6 * vae.steps) + " columns");
    Rng unused(0);
    const Eigen::Index b = x.rows();
    const MatrixXd h = dense_forward<double>(reshaped(x, b * vae.steps, 6), vae.enc_step, 0.0, false, unused);
    const MatrixXd o = dense_forward<double>(reshaped(h, b, 5 * vae.steps), vae.enc_head, 0.0, false, unused);
    mu = o.leftCols(vae.latent_dim);
    logvar = o.rightCols(vae.latent_dim);
}

MatrixXd reparameterize(const MatrixXd& mu, const MatrixXd& logvar, const MatrixXd& eps)
{
    return mu + ((0.5 * logvar.array()).exp() * eps.array()).matrix();
}

MatrixXd vae_decode(const SpongeVAE& vae, const MatrixXd& z)
{
    Rng unused(0);
    const Eigen::Index b = z.rows();
    const MatrixXd d = dense_forward<double>(z, vae.dec_expand, 0.0, false, unused);
    const MatrixXd r = dense_forward<double>(reshaped(d, b * vae.steps, 5), vae.dec_step, 0.0, false, unused);
    return reshaped(r, b, 6 * vae.steps);
}

VaeLoss vae_loss(const SpongeVAE& vae, const MatrixXd& x, bool training, Rng& rng, VaeGrad* grad)
{
    require(x.cols() == 6 * vae.steps, "vae_loss: expected " + std::to_string(6 * vae.steps) + " columns");
    const Eigen::Index b = x.rows();
    const Eigen::Index n = vae.steps;
    const int L = vae.latent_dim;

    DenseCache<double> c1, c2, c3, c4;
    const MatrixXd h = dense_forward<double>(reshaped(x, b * n, 6), vae.enc_step, 0.0, training, rng, &c1);
    const MatrixXd o = dense_forward<double>(reshaped(h, b, 5 * n), vae.enc_head, 0.0, training, rng, &c2);
    const MatrixXd mu = o.leftCols(L);
    const MatrixXd logvar = o.rightCols(L);
    MatrixXd eps = MatrixXd::Zero(b, L);
    if (training)
        for (Eigen::Index i = 0; i < eps.size(); ++i)
            eps.data()[i] = rng.normal();
    const MatrixXd z = reparameterize(mu, logvar, eps);
    const MatrixXd d = dense_forward<double>(z, vae.dec_expand, vae.dropout, training, rng, &c3);
    const MatrixXd r6 = dense_forward<double>(reshaped(d, b * n, 5), vae.dec_step, 0.0, training, rng, &c4);
    const MatrixXd r = reshaped(r6, b, 6 * n);

    VaeLoss loss;
    loss.recon = mse(r, x);
    loss.kl = kl_diag_gaussian(mu, logvar) / static_cast<double>(b);
    loss.total = loss.recon + vae.beta * loss.kl;
    if (!grad)
        return loss;

    const MatrixXd dr = mse_grad(r, x);
    const MatrixXd dd = dense_backward<double>(reshaped(dr, b * n, 6), vae.dec_step, c4, grad->dec_step);
    const MatrixXd dz = dense_backward<double>(reshaped(dd, b, 5 * n), vae.dec_expand, c3, grad->dec_expand);
    const double kb = vae.beta / static_cast<double>(b);
    MatrixXd dout(b, 2 * L);
    dout.leftCols(L) = dz + kb * mu;
    const Eigen::ArrayXXd sd = (0.5 * logvar.array()).exp();
    dout.rightCols(L) = (dz.array() * eps.array() * 0.5 * sd + kb * 0.5 * (logvar.array().exp() - 1.0)).matrix();
    const MatrixXd dh = dense_backward<double>(dout, vae.enc_head, c2, grad->enc_head);
    dense_backward<double>(reshaped(dh, b * n, 5), vae.enc_step, c1, grad->enc_step);
    return loss;
}

TrainReport pretrain_vae(SpongeVAE& vae, const MatrixXd& x, const VaeTrainConfig& cfg, Rng& rng)
{
    const auto t0 = Clock::now();
    vae.beta = cfg.beta;
    TrainReport rep;
    rep.seed = rng.seed();
    rep.hyperparameters = {{"epochs", cfg.epochs}, {"lr", cfg.lr}, {"beta", cfg.beta},
                           {"batch_size", cfg.batch_size}, {"samples", x.rows()}};
    auto params = vae.parameters();
    AdamState<double> adam = make_adam(params, cfg.lr);
    VaeGrad grad(vae);
    auto gparams = grad.parameters();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), 0);
    const Eigen::Index bs = std::max(1, cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);
        double total = 0.0, recon = 0.0, kl = 0.0;
        for (Eigen::Index start = 0; start < x.rows(); start += bs) {
            const Eigen::Index m = std::min(bs, x.rows() - start);
            MatrixXd batch(m, x.cols());
            for (Eigen::Index i = 0; i < m; ++i)
                batch.row(i) = x.row(order[static_cast<std::size_t>(start + i)]);
            grad.enc_step.zero();
            grad.enc_head.zero();
            grad.dec_expand.zero();
            grad.dec_step.zero();
            const VaeLoss l = vae_loss(vae, batch, true, rng, &grad);
            check_finite(l.total, epoch + 1, rep);
            adam_step(params, gparams, adam);
            total += l.total * static_cast<double>(m);
            recon += l.recon * static_cast<double>(m);
            kl += l.kl * static_cast<double>(m);
        }
        const double nx = static_cast<double>(x.rows());
        rep.losses.push_back(total / nx);
        rep.recon.push_back(recon / nx);
        rep.kl.push_back(kl / nx);
    }
    rep.final_loss = rep.losses.empty() ? 0.0 : rep.losses.back();
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

MatrixXd flatten_trajectories(const std::vector<FTTrajectory>& t, const NormStats& stats)
{
    require(!t.empty(), "flatten_trajectories: empty set");
    const Eigen::Index n = t.front().samples.rows();
    MatrixXd x(static_cast<Eigen::Index>(t.size()), n * 6);
    for (std::size_t i = 0; i < t.size(); ++i) {
        require(t[i].samples.rows() == n && t[i].samples.cols() == 6, "flatten_trajectories: trajectory shape");
        const MatrixXd norm = normalize(t[i].samples, stats);
        x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const VectorXd>(norm.data(), n * 6).transpose();
    }
    return x;
}

VectorXd encode_sponge(const SpongeVAE& vae, const MatrixXd& tau_exp, const NormStats& stats)
{
    require(tau_exp.rows() == vae.steps && tau_exp.cols() == 6,
            "encode_sponge: expected a " + std::to_string(vae.steps) + " x 6 trajectory");
    const MatrixXd norm = normalize(tau_exp, stats);
    MatrixXd mu, logvar;
    vae_encode(vae, reshaped(norm, 1, 6 * vae.steps), mu, logvar);
    return mu.row(0).transpose();
}

// ------------------------------------------------------- trajectory decoder

std::vector<VectorMap<double>> TrajDecoder::parameters()
{
    std::vector<VectorMap<double>> p;
    append(p, layer);
    return p;
}

TrajDecoder make_traj_decoder(Rng& rng, int latent_dim, int steps)
{
    TrajDecoder d;
    d.steps = steps;
    d.layer = make_dense<double>(latent_dim, 2 * steps, Activation::none, rng);
    return d;
}

MatrixXd decode_traj(const TrajDecoder& dec, const VectorXd& z)
{
    Rng unused(0);
    const VectorXd y = dense_forward<double>(z, dec.layer, 0.0, false, unused);
    return reshaped(y.transpose(), dec.steps, 2);
}

TrainReport train_traj_decoder(TrajDecoder& dec, const MatrixXd& z, const std::vector<Demonstration>& demos,
                               const NormStats& xy_stats, const TrajTrainConfig& cfg, Rng& rng)
{
    const auto t0 = Clock::now();
    require(z.rows() == static_cast<Eigen::Index>(demos.size()), "train_traj_decoder: one Z row per demo required");
    MatrixXd target(z.rows(), 2 * dec.steps);
    for (std::size_t i = 0; i < demos.size(); ++i) {
        require(demos[i].xy.rows() == dec.steps, "train_traj_decoder: demo length differs from decoder steps");
        const MatrixXd n = normalize(demos[i].xy, xy_stats);
        target.row(static_cast<Eigen::Index>(i)) = reshaped(n, 1, 2 * dec.steps);
    }
    TrainReport rep;
    rep.seed = rng.seed();
    rep.hyperparameters = {{"epochs", cfg.epochs}, {"lr", cfg.lr}, {"dropout", dec.dropout}, {"demos", demos.size()}};
    auto params = dec.parameters();
    AdamState<double> adam = make_adam(params, cfg.lr);
    DenseGrad<double> grad(dec.layer);
    std::vector<VectorMap<double>> gparams{flat(grad.weights), flat(grad.bias)};
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        MatrixXd zin = z;
        if (dec.dropout > 0.0)
            zin = zin.cwiseProduct(dropout_mask<double>(z.rows(), z.cols(), dec.dropout, rng));
        DenseCache<double> cache;
        const MatrixXd y = dense_forward<double>(zin, dec.layer, 0.0, true, rng, &cache);
        const double loss = mse(y, target);
        check_finite(loss, epoch + 1, rep);
        grad.zero();
        dense_backward<double>(mse_grad(y, target), dec.layer, cache, grad);
        adam_step(params, gparams, adam);
        rep.losses.push_back(loss);
    }
    Rng unused(0);
    rep.final_loss = mse(dense_forward<double>(z, dec.layer, 0.0, false, unused), target);
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

// ------------------------------------------------------------ FT feedback

std::vector<VectorMap<double>> FTFeedback::parameters()
{
    std::vector<VectorMap<double>> p;
    for (auto& l : tcn) {
        p.push_back(flat(l.kernels));
        p.push_back(flat(l.bias));
    }
    append(p, ft_head);
    append(p, hidden);
    append(p, out);
    return p;
}

FTFeedback make_ft_feedback(Rng& rng, const FeedbackArch& arch, int latent_dim)
{
    if (arch.window < 1)
        throw std::invalid_argument("ft feedback: window must be >= 1");
    FTFeedback f;
    f.window = arch.window;
    f.dropout = arch.dropout;
    int in = 6;
    for (int i = 0; i < arch.layers; ++i) {
        f.tcn.push_back(make_tcn<double>(in, arch.channels, arch.kernel_len, 1 << i, Activation::relu, rng));
        in = arch.channels;
    }
    f.ft_head = make_dense<double>(in, 6, Activation::none, rng);
    f.hidden = make_dense<double>(latent_dim + 6, arch.hidden, Activation::relu, rng);
    f.out = make_dense<double>(arch.hidden, 1, Activation::none, rng);
    return f;
}

FeedbackGrad::FeedbackGrad(const FTFeedback& f)
    : ft_head(f.ft_head)
    , hidden(f.hidden)
    , out(f.out)
{
    for (const auto& l : f.tcn)
        tcn.emplace_back(l);
}

std::vector<VectorMap<double>> FeedbackGrad::parameters()
{
    std::vector<VectorMap<double>> p;
    for (auto& g : tcn) {
        p.push_back(flat(g.kernels));
        p.push_back(flat(g.bias));
    }
    append(p, ft_head);
    append(p, hidden);
    append(p, out);
    return p;
}

namespace {

struct FeedbackCaches {
    std::vector<TcnCache<double>> tcn;
    DenseCache<double> head, hidden, out;
};

MatrixXd feedback_run(const FTFeedback& fb, const MatrixXd& windows, const MatrixXd& z, bool training, Rng& rng,
                      FeedbackCaches* c)
{
    const Eigen::Index T = fb.window;
    require(windows.rows() % T == 0, "ft feedback: window rows must be a multiple of the window size");
    const Eigen::Index b = windows.rows() / T;
    require(z.rows() == b, "ft feedback: one Z_sponge row per window required");
    MatrixXd h = windows;
    if (c)
        c->tcn.resize(fb.tcn.size());
    for (std::size_t i = 0; i < fb.tcn.size(); ++i)
        h = tcn_layer_forward<double>(h, T, fb.tcn[i], fb.dropout, training, rng, c ? &c->tcn[i] : nullptr);
    MatrixXd last(b, h.cols());
    for (Eigen::Index i = 0; i < b; ++i)
        last.row(i) = h.row(i * T + T - 1);
    const MatrixXd zft = dense_forward<double>(last, fb.ft_head, 0.0, training, rng, c ? &c->head : nullptr);
    MatrixXd cat(b, z.cols() + zft.cols());
    cat << z, zft;
    const MatrixXd hid = dense_forward<double>(cat, fb.hidden, fb.dropout, training, rng, c ? &c->hidden : nullptr);
    return dense_forward<double>(hid, fb.out, 0.0, training, rng, c ? &c->out : nullptr);
}

} // namespace

MatrixXd feedback_forward(const FTFeedback& fb, const MatrixXd& windows, const MatrixXd& z, bool training, Rng& rng)
{
    return feedback_run(fb, windows, z, training, rng, nullptr);
}

double feedback_loss(const FTFeedback& fb, const MatrixXd& windows, const MatrixXd& z, const MatrixXd& targets,
                     bool training, Rng& rng, FeedbackGrad* grad)
{
    FeedbackCaches c;
    const MatrixXd y = feedback_run(fb, windows, z, training, rng, grad ? &c : nullptr);
    const double loss = mse(y, targets);
    if (!grad)
        return loss;
    const Eigen::Index T = fb.window;
    const Eigen::Index b = y.rows();
    const MatrixXd dhid = dense_backward<double>(mse_grad(y, targets), fb.out, c.out, grad->out);
    const MatrixXd dcat = dense_backward<double>(dhid, fb.hidden, c.hidden, grad->hidden);
    const MatrixXd dlast = dense_backward<double>(dcat.rightCols(fb.ft_head.out()), fb.ft_head, c.head, grad->ft_head);
    MatrixXd dh = MatrixXd::Zero(b * T, dlast.cols());
    for (Eigen::Index i = 0; i < b; ++i)
        dh.row(i * T + T - 1) = dlast.row(i);
    for (std::size_t i = fb.tcn.size(); i-- > 0;)
        dh = tcn_layer_backward<double>(dh, T, fb.tcn[i], c.tcn[i], grad->tcn[i]);
    return loss;
}

FeedbackSet make_feedback_set(const std::vector<Demonstration>& demos, const MatrixXd& z_per_demo, int window,
                              const ModelStats& stats)
{
    require(z_per_demo.rows() == static_cast<Eigen::Index>(demos.size()), "feedback set: one Z row per demo");
    std::vector<WindowPair> pairs;
    std::vector<Eigen::Index> owner;
    for (std::size_t i = 0; i < demos.size(); ++i)
        for (auto& p : build_demo_windows(demos[i], window)) {
            pairs.push_back(std::move(p));
            owner.push_back(static_cast<Eigen::Index>(i));
        }
    FeedbackSet s;
    const auto n = static_cast<Eigen::Index>(pairs.size());
    s.windows.resize(n * window, 6);
    s.z.resize(n, z_per_demo.cols());
    s.targets.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pairs[static_cast<std::size_t>(i)];
        s.windows.middleRows(i * window, window) = normalize(p.window, stats.ft_demo);
        s.z.row(i) = z_per_demo.row(owner[static_cast<std::size_t>(i)]);
        s.targets(i, 0) = normalize(p.dh_next, stats.dh);
    }
    return s;
}

TrainReport train_ft_feedback(FTFeedback& fb, const FeedbackSet& data, const FeedbackTrainConfig& cfg, Rng& rng)
{
    const auto t0 = Clock::now();
    TrainReport rep;
    rep.seed = rng.seed();
    rep.hyperparameters = {{"epochs", cfg.epochs}, {"lr", cfg.lr}, {"window", fb.window},
                           {"layers", fb.tcn.size()}, {"pairs", data.targets.rows()}};
    auto params = fb.parameters();
    AdamState<double> adam = make_adam(params, cfg.lr);
    FeedbackGrad grad(fb);
    auto gparams = grad.parameters();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (auto& g : gparams)
            g.setZero();
        const double loss = feedback_loss(fb, data.windows, data.z, data.targets, true, rng, &grad);
        check_finite(loss, epoch + 1, rep);
        adam_step(params, gparams, adam);
        rep.losses.push_back(loss);
    }
    rep.final_loss = feedback_loss(fb, data.windows, data.z, data.targets, false, rng);
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

double predict_dh(const FTFeedback& fb, const VectorXd& z_sponge, const MatrixXd& window_normalized,
                  const NormStats& dh_stats)
{
    require(window_normalized.rows() == fb.window && window_normalized.cols() == 6,
            "predict_dh: expected a " + std::to_string(fb.window) + " x 6 window");
    require(z_sponge.size() + 6 == fb.hidden.in(), "predict_dh: Z_sponge length mismatch");
    Rng unused(0);
    const MatrixXd y = feedback_forward(fb, window_normalized, z_sponge.transpose(), false, unused);
    return denormalize(y(0, 0), dh_stats);
}

// ------------------------------------------------------------ checkpoints

nlohmann::json to_checkpoint(const SpongeVAE& v)
{
    auto j = checkpoint_header("vae", "norm_stats.json");
    j["config"] = {{"steps", v.steps}, {"latent_dim", v.latent_dim}, {"beta", v.beta}, {"dropout", v.dropout}};
    j["layers"] = {layer_json("enc_step", v.enc_step, 0.0), layer_json("enc_head", v.enc_head, 0.0),
                   layer_json("dec_expand", v.dec_expand, v.dropout), layer_json("dec_step", v.dec_step, 0.0)};
    return j;
}

nlohmann::json to_checkpoint(const TrajDecoder& d)
{
    auto j = checkpoint_header("traj_decoder", "norm_stats.json");
    j["config"] = {{"steps", d.steps}, {"dropout", d.dropout}, {"dropout_on", "input"}};
    j["layers"] = {layer_json("traj", d.layer, d.dropout)};
    return j;
}

nlohmann::json to_checkpoint(const FTFeedback& f)
{
    auto j = checkpoint_header("ft_feedback", "norm_stats.json");
    j["config"] = {{"window", f.window}, {"dropout", f.dropout}, {"tcn_layers", f.tcn.size()}};
    for (std::size_t i = 0; i < f.tcn.size(); ++i)
        j["layers"].push_back(layer_json("tcn" + std::to_string(i), f.tcn[i], f.dropout));
    j["layers"].push_back(layer_json("ft_head", f.ft_head, 0.0));
    j["layers"].push_back(layer_json("hidden", f.hidden, f.dropout));
    j["layers"].push_back(layer_json("out", f.out, 0.0));
    return j;
}

namespace {

void expect_model(const nlohmann::json& j, const std::string& model)
{
    if (j.value("schema_version", -1) != checkpoint_schema_version)
        throw CheckpointError("checkpoint: unsupported schema_version");
    if (j.value("model", "") != model)
        throw CheckpointError("checkpoint: expected model " + model);
}

} // namespace

SpongeVAE vae_from_checkpoint(const nlohmann::json& j)
{
    expect_model(j, "vae");
    SpongeVAE v;
    const auto& c = j.at("config");
    v.steps = c.at("steps").get<int>();
    v.latent_dim = c.at("latent_dim").get<int>();
    v.beta = c.at("beta").get<double>();
    v.dropout = c.at("dropout").get<double>();
    v.enc_step = dense_from_json(find_layer(j, "enc_step"));
    v.enc_head = dense_from_json(find_layer(j, "enc_head"));
    v.dec_expand = dense_from_json(find_layer(j, "dec_expand"));
    v.dec_step = dense_from_json(find_layer(j, "dec_step"));
    return v;
}

TrajDecoder traj_decoder_from_checkpoint(const nlohmann::json& j)
{
    expect_model(j, "traj_decoder");
    TrajDecoder d;
    d.steps = j.at("config").at("steps").get<int>();
    d.dropout = j.at("config").at("dropout").get<double>();
    d.layer = dense_from_json(find_layer(j, "traj"));
    return d;
}

FTFeedback ft_feedback_from_checkpoint(const nlohmann::json& j)
{
    expect_model(j, "ft_feedback");
    FTFeedback f;
    const auto& c = j.at("config");
    f.window = c.at("window").get<int>();
    f.dropout = c.at("dropout").get<double>();
    const int n = c.at("tcn_layers").get<int>();
    for (int i = 0; i < n; ++i)
        f.tcn.push_back(tcn_from_json(find_layer(j, "tcn" + std::to_string(i))));
    f.ft_head = dense_from_json(find_layer(j, "ft_head"));
    f.hidden = dense_from_json(find_layer(j, "hidden"));
    f.out = dense_from_json(find_layer(j, "out"));
    return f;
}

} // namespace wipe
