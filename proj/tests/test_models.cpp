#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wipe/models/models.hpp"

#include <cmath>
#include <functional>

using namespace wipe;

namespace {

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = 0.0, double hi = 0.9)
{
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = rng.uniform(lo, hi);
    return m;
}

// Largest relative FD error over a strided subset of one parameter block.
double fd_check(VectorMap<double>& p, const VectorMap<double>& g, const std::function<double()>& f, int stride)
{
    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.size(); i += stride) {
        const double keep = p[i];
        p[i] = keep + h;
        const double up = f();
        p[i] = keep - h;
        const double down = f();
        p[i] = keep;
        const double num = (up - down) / (2 * h);
        if (std::abs(num) < 1e-7 && std::abs(g[i]) < 1e-7)
            continue;
        worst = std::max(worst, std::abs(num - g[i]) / std::max(std::abs(num), std::abs(g[i])));
    }
    return worst;
}

struct DemoFixture {
    std::vector<Demonstration> demos;
    std::vector<FTTrajectory> explore;
    ModelStats stats;

    explicit DemoFixture(int n)
    {
        const auto normal = make_sponge_grid().front();
        const auto surface = SurfaceProfile::sloped(0.0, {0.1, 0.0});
        MatrixXd all(400 * n, 6);
        for (int i = 0; i < n; ++i) {
            Rng rng(1000 + static_cast<std::uint64_t>(i));
            demos.push_back(synth_demonstration(normal, surface, ExpertConfig{}, rng));
            explore.push_back(explore_sponge(normal, rng.next_u64()));
            all.middleRows(400 * i, 400) = explore.back().samples;
        }
        stats.ft_exp = fit_norm_stats(all);
        fit_demo_stats(stats, demos);
    }
};

} // namespace

TEST_CASE("vae shapes and deterministic encoding")
{
    Rng rng(1);
    auto vae = make_vae(rng);
    MatrixXd mu, lv;
    vae_encode(vae, random_matrix(3, 2400, rng), mu, lv);
    CHECK(mu.rows() == 3);
    CHECK(mu.cols() == 5);
    CHECK(lv.cols() == 5);
    CHECK(vae_decode(vae, mu).cols() == 2400);

    SpongeParams p;
    SimConfig sc;
    sc.seed = 2;
    const MatrixXd tau = run_exploratory(p, SurfaceProfile::flat(0.0), sc);
    const NormStats s = fit_norm_stats(tau);
    const VectorXd z1 = encode_sponge(vae, tau, s);
    const VectorXd z2 = encode_sponge(vae, tau, s);
    CHECK(z1.size() == 5);
    CHECK(z1 == z2);
}

TEST_CASE("reparameterization collapses onto the mean")
{
    Rng rng(2);
    const MatrixXd mu = random_matrix(4, 5, rng, -1, 1);
    MatrixXd eps(4, 5);
    for (Eigen::Index i = 0; i < eps.size(); ++i)
        eps.data()[i] = rng.normal();
    CHECK((reparameterize(mu, MatrixXd::Constant(4, 5, -30.0), eps) - mu).cwiseAbs().maxCoeff() < 1e-6);
    const MatrixXd z = reparameterize(mu, MatrixXd::Zero(4, 5), eps);
    CHECK((z - mu - eps).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("vae loss decomposes into mse plus beta kl")
{
    Rng rng(3);
    auto vae = make_vae(rng);
    const MatrixXd x = random_matrix(4, 2400, rng);
    const VaeLoss l = vae_loss(vae, x, false, rng);
    MatrixXd mu, lv;
    vae_encode(vae, x, mu, lv);
    const MatrixXd r = vae_decode(vae, mu);
    double se = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        se += (r.data()[i] - x.data()[i]) * (r.data()[i] - x.data()[i]);
    double kl = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        kl += 0.5 * (mu.data()[i] * mu.data()[i] + std::exp(lv.data()[i]) - 1.0 - lv.data()[i]);
    kl /= 4.0;
    CHECK(std::abs(l.recon - se / static_cast<double>(x.size())) < 1e-12);
    CHECK(std::abs(l.kl - kl) < 1e-12);
    CHECK(std::abs(l.total - (l.recon + 0.06 * l.kl)) < 1e-12);
}

TEST_CASE("vae gradients match finite differences with sampling and dropout")
{
    Rng init(4);
    auto vae = make_vae(init, 6, 5);
    const MatrixXd x = random_matrix(3, 36, init);
    VaeGrad g(vae);
    Rng fixed(99);
    vae_loss(vae, x, true, fixed, &g);
    auto f = [&] {
        Rng r(99);
        return vae_loss(vae, x, true, r).total;
    };
    auto params = vae.parameters();
    auto grads = g.parameters();
    for (std::size_t i = 0; i < params.size(); ++i)
        CHECK(fd_check(params[i], grads[i], f, 1) < 1e-4);
}

TEST_CASE("feedback gradients match finite differences")
{
    for (int layers : {1, 2, 3}) {
        Rng init(5 + static_cast<std::uint64_t>(layers));
        FeedbackArch arch;
        arch.layers = layers;
        arch.channels = 4;
        arch.hidden = 7;
        arch.window = 4;
        auto fb = make_ft_feedback(init, arch);
        const MatrixXd w = random_matrix(3 * 4, 6, init);
        const MatrixXd z = random_matrix(3, 5, init, -1, 1);
        const MatrixXd y = random_matrix(3, 1, init);
        FeedbackGrad g(fb);
        Rng fixed(7);
        feedback_loss(fb, w, z, y, true, fixed, &g);
        auto f = [&] {
            Rng r(7);
            return feedback_loss(fb, w, z, y, true, r);
        };
        auto params = fb.parameters();
        auto grads = g.parameters();
        for (std::size_t i = 0; i < params.size(); ++i)
            CHECK(fd_check(params[i], grads[i], f, 1) < 1e-4);
    }
}

TEST_CASE("vae pretraining curve and the beta constraint")
{
    Rng data_rng(6);
    const auto set = gen_unlabeled_sim(1000, data_rng);
    MatrixXd all(400 * 1000, 6);
    for (int i = 0; i < 1000; ++i)
        all.middleRows(400 * i, 400) = set.trajectories[static_cast<std::size_t>(i)].samples;
    const MatrixXd x = flatten_trajectories(set.trajectories, fit_norm_stats(all));

    Rng r1(7);
    auto vae = make_vae(r1);
    const SpongeVAE before = vae;
    const auto rep = pretrain_vae(vae, x, VaeTrainConfig{}, r1);
    REQUIRE(rep.recon.size() == 200);
    CHECK(rep.recon.back() <= 0.2 * rep.recon.front());
    CHECK(vae.enc_head.weights != before.enc_head.weights);

    Rng r0(7);
    auto free_vae = make_vae(r0);
    VaeTrainConfig no_kl;
    no_kl.beta = 0.0;
    const auto rep0 = pretrain_vae(free_vae, x, no_kl, r0);
    CHECK(rep0.recon.back() <= rep.recon.back());
}

TEST_CASE("trajectory decoder fits the demonstrated paths")
{
    DemoFixture fx(8);
    Rng vr(8);
    const auto vae = make_vae(vr);
    const auto frozen = vae.enc_head.weights;
    MatrixXd z(8, 5);
    for (int i = 0; i < 8; ++i)
        z.row(i) = encode_sponge(vae, fx.explore[static_cast<std::size_t>(i)].samples, fx.stats.ft_exp).transpose();
    Rng tr(9);
    auto dec = make_traj_decoder(tr);
    const auto rep = train_traj_decoder(dec, z, fx.demos, fx.stats.xy, TrajTrainConfig{}, tr);
    CHECK(rep.final_loss <= 1e-3);
    CHECK(vae.enc_head.weights == frozen);
    const MatrixXd xy = decode_traj(dec, z.row(0).transpose());
    CHECK(xy.rows() == 25);
    CHECK(xy.cols() == 2);
}

TEST_CASE("ft feedback training and prediction")
{
    DemoFixture fx(9);
    const std::vector<Demonstration> train_demos(fx.demos.begin(), fx.demos.begin() + 8);
    ModelStats stats = fx.stats;
    fit_demo_stats(stats, train_demos);
    MatrixXd z(8, 5);
    Rng zr(10);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 5; ++j)
            z(i, j) = zr.normal(0.0, 0.01);

    Rng tr(11);
    auto fb = make_ft_feedback(tr);
    const auto set = make_feedback_set(train_demos, z, 5, stats);
    CHECK(set.targets.rows() == 8 * 24);
    const auto rep = train_ft_feedback(fb, set, FeedbackTrainConfig{}, tr);
    CHECK(rep.losses.back() <= 0.1 * rep.losses.front());

    const MatrixXd w = normalize(build_demo_windows(fx.demos[8], 5)[10].window, stats.ft_demo);
    const VectorXd zs = z.row(0).transpose();
    const double a = predict_dh(fb, zs, w, stats.dh);
    CHECK(a == predict_dh(fb, zs, w, stats.dh));
    CHECK(std::isfinite(predict_dh(fb, zs, MatrixXd::Constant(5, 6, 0.9), stats.dh)));
    VectorXd stiff = zs;
    stiff[0] += 1.0;
    CHECK(predict_dh(fb, stiff, w, stats.dh) != a);

    // Hold-out demo: per-window error against the training RMSE, in metres.
    Rng unused(0);
    const MatrixXd fit = feedback_forward(fb, set.windows, set.z, false, unused);
    double train_sq = 0.0;
    for (Eigen::Index i = 0; i < fit.rows(); ++i) {
        const double e = denormalize(fit(i, 0), stats.dh) - denormalize(set.targets(i, 0), stats.dh);
        train_sq += e * e / static_cast<double>(fit.rows());
    }
    const double train_rmse = std::sqrt(train_sq);
    double held_sq = 0.0;
    const auto pairs = build_demo_windows(fx.demos[8], 5);
    for (const auto& p : pairs) {
        const double e = predict_dh(fb, zs, normalize(p.window, stats.ft_demo), stats.dh) - p.dh_next;
        held_sq += e * e / static_cast<double>(pairs.size());
    }
    CHECK(std::sqrt(held_sq) <= 3.0 * train_rmse);
}

TEST_CASE("checkpoints round trip and reject the wrong model")
{
    Rng rng(12);
    const auto vae = make_vae(rng);
    const auto dec = make_traj_decoder(rng);
    FeedbackArch arch;
    arch.layers = 5;
    const auto fb = make_ft_feedback(rng, arch);

    const auto v2 = vae_from_checkpoint(nlohmann::json::parse(to_checkpoint(vae).dump()));
    CHECK(v2.enc_head.weights == vae.enc_head.weights);
    CHECK(v2.dec_step.bias == vae.dec_step.bias);
    const auto d2 = traj_decoder_from_checkpoint(nlohmann::json::parse(to_checkpoint(dec).dump()));
    CHECK(d2.layer.weights == dec.layer.weights);
    const auto f2 = ft_feedback_from_checkpoint(nlohmann::json::parse(to_checkpoint(fb).dump()));
    REQUIRE(f2.tcn.size() == 5);
    CHECK(f2.tcn[4].dilation == 16);
    CHECK(f2.tcn[4].kernels == fb.tcn[4].kernels);
    CHECK(f2.out.weights == fb.out.weights);

    CHECK_THROWS(vae_from_checkpoint(to_checkpoint(dec)));
    auto future = to_checkpoint(fb);
    future["schema_version"] = 99;
    CHECK_THROWS(ft_feedback_from_checkpoint(future));
}

TEST_CASE("model stats serialize")
{
    DemoFixture fx(2);
    const auto back = model_stats_from_json(nlohmann::json::parse(to_json(fx.stats).dump()));
    CHECK(back.ft_demo.min == fx.stats.ft_demo.min);
    CHECK(back.dh.max == fx.stats.dh.max);
    CHECK(back.ft_exp.max == fx.stats.ft_exp.max);
}
