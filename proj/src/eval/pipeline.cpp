#include "wipe/eval/eval.hpp"

#include "wipe/nn/checkpoint.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <mutex>
#include <thread>

namespace wipe {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where)
{
    if (!j.is_object())
        throw std::invalid_argument("config: " + where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("config: unknown key " + where + "." + it.key());
}

template <class T>
void read(const json& j, const char* key, T& dst)
{
    if (j.contains(key))
        dst = j.at(key).get<T>();
}

} // namespace

json to_json(const PipelineConfig& c)
{
    const auto& e = c.expert;
    const auto& ep = c.episode;
    return {
        {"seed", c.seed},
        {"unlabeled_count", c.unlabeled_count},
        {"demo_count", c.demo_count},
        {"extra_demos", c.extra_demos},
        {"reference_demos", c.reference_demos},
        {"vae", {{"epochs", c.vae.epochs}, {"lr", c.vae.lr}, {"beta", c.vae.beta}, {"batch_size", c.vae.batch_size}}},
        {"traj", {{"epochs", c.traj.epochs}, {"lr", c.traj.lr}}},
        {"feedback", {{"epochs", c.feedback.epochs}, {"lr", c.feedback.lr}, {"layers", c.arch.layers},
                      {"channels", c.arch.channels}, {"kernel_len", c.arch.kernel_len}, {"window", c.arch.window},
                      {"hidden", c.arch.hidden}, {"dropout", c.arch.dropout}}},
        {"expert", {{"gain_press", e.gain_press}, {"gain_ease", e.gain_ease}, {"search_step", e.search_step},
                    {"z_jitter", e.z_jitter}, {"start_min", e.start_min}, {"start_max", e.start_max},
                    {"phase_jitter", e.phase_jitter}, {"f_cap", e.f_cap}, {"dstar_fraction", e.dstar_fraction},
                    {"reference_start", e.start_compression}}},
        {"episode", {{"anchor_compression", ep.anchor_compression},
                     {"demo_slope", ep.demo_surface.gradient.x()},
                     {"ac_target_compression", ep.ac_target_compression},
                     {"max_force", ep.safety.max_force},
                     {"gains", {{"M", ep.gains.M}, {"B", ep.gains.B}, {"K", ep.gains.K}, {"T", ep.gains.T}}},
                     {"wall_swap_offset", ep.wall_swap_offset}}},
        {"surfaces", {{"low", c.low_height}, {"high", c.high_height}, {"sloped_base", c.sloped_base},
                      {"sloped_gradient", {c.sloped_gradient.x(), c.sloped_gradient.y()}},
                      {"wall_offset", c.wall_offset}}},
        {"contact_threshold", c.contact_threshold},
        {"threads", c.threads},
    };
}

PipelineConfig pipeline_config_from_json(const json& j)
{
    PipelineConfig c;
    reject_unknown(j, {"seed", "unlabeled_count", "demo_count", "extra_demos", "reference_demos", "vae", "traj",
                       "feedback", "expert", "episode", "surfaces", "contact_threshold", "threads"},
                   "config");
    read(j, "seed", c.seed);
    read(j, "unlabeled_count", c.unlabeled_count);
    read(j, "demo_count", c.demo_count);
    read(j, "extra_demos", c.extra_demos);
    read(j, "reference_demos", c.reference_demos);
    read(j, "contact_threshold", c.contact_threshold);
    read(j, "threads", c.threads);
    if (j.contains("vae")) {
        const auto& v = j.at("vae");
        reject_unknown(v, {"epochs", "lr", "beta", "batch_size"}, "vae");
        read(v, "epochs", c.vae.epochs);
        read(v, "lr", c.vae.lr);
        read(v, "beta", c.vae.beta);
        read(v, "batch_size", c.vae.batch_size);
    }
    if (j.contains("traj")) {
        const auto& v = j.at("traj");
        reject_unknown(v, {"epochs", "lr"}, "traj");
        read(v, "epochs", c.traj.epochs);
        read(v, "lr", c.traj.lr);
    }
    if (j.contains("feedback")) {
        const auto& v = j.at("feedback");
        reject_unknown(v, {"epochs", "lr", "layers", "channels", "kernel_len", "window", "hidden", "dropout"}, "feedback");
        read(v, "epochs", c.feedback.epochs);
        read(v, "lr", c.feedback.lr);
        read(v, "layers", c.arch.layers);
        read(v, "channels", c.arch.channels);
        read(v, "kernel_len", c.arch.kernel_len);
        read(v, "window", c.arch.window);
        read(v, "hidden", c.arch.hidden);
        read(v, "dropout", c.arch.dropout);
    }
    if (j.contains("expert")) {
        const auto& v = j.at("expert");
        reject_unknown(v, {"gain_press", "gain_ease", "search_step", "z_jitter", "start_min", "start_max",
                           "phase_jitter", "f_cap", "dstar_fraction", "reference_start"},
                       "expert");
        read(v, "gain_press", c.expert.gain_press);
        read(v, "gain_ease", c.expert.gain_ease);
        read(v, "search_step", c.expert.search_step);
        read(v, "z_jitter", c.expert.z_jitter);
        read(v, "start_min", c.expert.start_min);
        read(v, "start_max", c.expert.start_max);
        read(v, "phase_jitter", c.expert.phase_jitter);
        read(v, "f_cap", c.expert.f_cap);
        read(v, "dstar_fraction", c.expert.dstar_fraction);
        read(v, "reference_start", c.expert.start_compression);
    }
    if (j.contains("episode")) {
        const auto& v = j.at("episode");
        reject_unknown(v, {"anchor_compression", "demo_slope", "ac_target_compression", "max_force", "gains",
                           "wall_swap_offset"},
                       "episode");
        read(v, "anchor_compression", c.episode.anchor_compression);
        if (v.contains("demo_slope"))
            c.episode.demo_surface.gradient.x() = v.at("demo_slope").get<double>();
        read(v, "ac_target_compression", c.episode.ac_target_compression);
        read(v, "max_force", c.episode.safety.max_force);
        read(v, "wall_swap_offset", c.episode.wall_swap_offset);
        if (v.contains("gains")) {
            const auto& g = v.at("gains");
            reject_unknown(g, {"M", "B", "K", "T"}, "episode.gains");
            read(g, "M", c.episode.gains.M);
            read(g, "B", c.episode.gains.B);
            read(g, "K", c.episode.gains.K);
            read(g, "T", c.episode.gains.T);
        }
    }
    if (j.contains("surfaces")) {
        const auto& v = j.at("surfaces");
        reject_unknown(v, {"low", "high", "sloped_base", "sloped_gradient", "wall_offset"}, "surfaces");
        read(v, "low", c.low_height);
        read(v, "high", c.high_height);
        read(v, "sloped_base", c.sloped_base);
        read(v, "wall_offset", c.wall_offset);
        if (v.contains("sloped_gradient")) {
            const auto g = v.at("sloped_gradient").get<std::vector<double>>();
            if (g.size() != 2)
                throw std::invalid_argument("config: surfaces.sloped_gradient needs 2 values");
            c.sloped_gradient = {g[0], g[1]};
        }
    }
    if (c.unlabeled_count < 1 || c.demo_count < 1 || c.extra_demos < 0 || c.reference_demos < 1)
        throw std::invalid_argument("config: counts must be positive");
    if (!c.episode.gains.valid())
        throw std::invalid_argument("config: admittance gains give a non-positive denominator");
    return c;
}

const std::vector<std::string>& table_heights()
{
    static const std::vector<std::string> h{"low", "high", "sloped"};
    return h;
}

const std::vector<std::string>& all_heights()
{
    static const std::vector<std::string> h{"low", "high", "sloped", "wall"};
    return h;
}

SurfaceProfile test_surface(const PipelineConfig& c, const std::string& height)
{
    if (height == "low")
        return SurfaceProfile::flat(c.low_height, "low");
    if (height == "high")
        return SurfaceProfile::flat(c.high_height, "high");
    if (height == "sloped")
        return SurfaceProfile::sloped(c.sloped_base, c.sloped_gradient, "sloped");
    if (height == "wall")
        return SurfaceProfile::wall(c.wall_offset, "wall");
    throw std::invalid_argument("unknown surface height: " + height);
}

std::uint64_t stage_seed(const PipelineConfig& c, Stage s, std::uint64_t index)
{
    return Rng::derive(c.seed, static_cast<std::uint64_t>(s) * 1000003ULL + index).next_u64();
}

namespace {

double radical_inverse2(unsigned i)
{
    double r = 0.0, f = 0.5;
    for (; i; i >>= 1, f *= 0.5)
        if (i & 1u)
            r += f;
    return r;
}

} // namespace

void generate_unlabeled(const PipelineConfig& c, Dataset& ds)
{
    Rng rng(stage_seed(c, Stage::unlabeled));
    ds.unlabeled = gen_unlabeled_sim(c.unlabeled_count, rng);
    ds.seeds["unlabeled"] = rng.seed();
    ds.config["unlabeled"] = {{"count", c.unlabeled_count}, {"master_seed", c.seed}};
}

void generate_demos(const PipelineConfig& c, Dataset& ds)
{
    const SpongeParams normal = make_sponge_grid().front();
    ds.demos.clear();
    ds.demo_exploratory.clear();
    ds.demo_sponges.clear();
    const int total = c.demo_count + c.extra_demos;
    // Start compressions follow a shifted base-2 radical inverse, so every
    // prefix (4, 8, 12 demos) spreads evenly over [start_min, start_max]
    // and always includes starts out of contact.
    const double shift = Rng(stage_seed(c, Stage::demos, 1u << 20)).uniform();
    for (int i = 0; i < total; ++i) {
        Rng rng(stage_seed(c, Stage::demos, static_cast<std::uint64_t>(i)));
        ExpertConfig e = c.expert;
        e.fixed_start = true;
        const double q = std::fmod(radical_inverse2(static_cast<unsigned>(i)) + shift, 1.0);
        e.start_compression = e.start_min + q * (e.start_max - e.start_min);
        ds.demos.push_back(synth_demonstration(normal, c.episode.demo_surface, e, rng));
        ds.demo_exploratory.push_back(explore_sponge(normal, rng.next_u64()));
        ds.demo_sponges.push_back(normal);
    }
    ds.seeds["demos"] = stage_seed(c, Stage::demos);
    ds.config["demos"] = {{"count", total}, {"master_seed", c.seed}, {"expert", to_json(c)["expert"]}};
}

ModelStats fit_stats(const PipelineConfig& c, const Dataset& ds)
{
    ModelStats s;
    MatrixXd all(static_cast<Eigen::Index>(ds.unlabeled.trajectories.size()) * exploratory_steps, 6);
    for (std::size_t i = 0; i < ds.unlabeled.trajectories.size(); ++i)
        all.middleRows(static_cast<Eigen::Index>(i) * exploratory_steps, exploratory_steps) =
            ds.unlabeled.trajectories[i].samples;
    s.ft_exp = fit_norm_stats(all);
    require(static_cast<int>(ds.demos.size()) >= c.demo_count, "fit_stats: not enough demonstrations");
    fit_demo_stats(s, std::vector<Demonstration>(ds.demos.begin(), ds.demos.begin() + c.demo_count));
    return s;
}

PretrainResult pretrain(const PipelineConfig& c, const Dataset& ds, const ModelStats& stats)
{
    Rng rng(stage_seed(c, Stage::pretrain));
    PretrainResult r{make_vae(rng), {}};
    const MatrixXd x = flatten_trajectories(ds.unlabeled.trajectories, stats.ft_exp);
    r.report = pretrain_vae(r.vae, x, c.vae, rng);
    return r;
}

MatrixXd demo_latents(const SpongeVAE& vae, const Dataset& ds, const NormStats& ft_exp, std::size_t count)
{
    require(count <= ds.demos.size(), "demo_latents: not enough demonstrations");
    MatrixXd z(static_cast<Eigen::Index>(count), vae.latent_dim);
    for (std::size_t i = 0; i < count; ++i)
        z.row(static_cast<Eigen::Index>(i)) = encode_sponge(vae, ds.demo_exploratory[i].samples, ft_exp).transpose();
    return z;
}

TrainResult train(const PipelineConfig& c, const Dataset& ds, const SpongeVAE& vae, const ModelStats& stats)
{
    require(static_cast<int>(ds.demos.size()) >= c.demo_count, "train: not enough demonstrations");
    const std::vector<Demonstration> demos(ds.demos.begin(), ds.demos.begin() + c.demo_count);
    const MatrixXd z = demo_latents(vae, ds, stats.ft_exp, demos.size());

    TrainResult r;
    r.models.vae = vae;
    r.models.stats = stats;

    Rng trng(stage_seed(c, Stage::traj));
    r.models.traj = make_traj_decoder(trng, vae.latent_dim, c.expert.steps);
    r.traj_report = train_traj_decoder(r.models.traj, z, demos, stats.xy, c.traj, trng);

    Rng frng(stage_seed(c, Stage::feedback));
    r.models.feedback = make_ft_feedback(frng, c.arch, vae.latent_dim);
    const FeedbackSet set = make_feedback_set(demos, z, c.arch.window, stats);
    r.feedback_report = train_ft_feedback(r.models.feedback, set, c.feedback, frng);

    r.models.open_loop_z = VectorXd::Zero(c.expert.steps);
    for (const auto& d : demos)
        r.models.open_loop_z += d.z;
    r.models.open_loop_z /= static_cast<double>(demos.size());
    return r;
}

ReferenceTable reference_table(const PipelineConfig& c)
{
    ExpertConfig e = c.expert;
    e.fixed_start = true;
    std::vector<SpongeDemos> per;
    const auto grid = make_sponge_grid();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        SpongeDemos sd{grid[i], {}};
        for (int k = 0; k < c.reference_demos; ++k) {
            Rng rng(stage_seed(c, Stage::reference, i * 100 + static_cast<std::uint64_t>(k)));
            sd.demos.push_back(synth_demonstration(grid[i], c.episode.demo_surface, e, rng));
        }
        per.push_back(std::move(sd));
    }
    return build_reference_table(per, c.contact_threshold);
}

namespace {

template <class F>
void parallel_for(std::size_t n, int threads, F&& f)
{
    unsigned hw = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
    hw = std::min<unsigned>(hw, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
    if (hw <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < hw; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

std::size_t index_of(const std::vector<std::string>& v, const std::string& s)
{
    return static_cast<std::size_t>(std::find(v.begin(), v.end(), s) - v.begin());
}

} // namespace

MatrixRun run_matrix(const PipelineConfig& c, const TrainedModels& m, const ReferenceTable& ref,
                     const MatrixOptions& opt)
{
    const auto grid = make_sponge_grid();
    std::vector<std::string> grid_names;
    for (const auto& g : grid)
        grid_names.push_back(g.name);
    std::vector<SpongeParams> sponges;
    if (opt.sponges.empty())
        sponges = grid;
    else
        for (const auto& name : opt.sponges) {
            const auto i = index_of(grid_names, name);
            if (i == grid.size())
                throw std::invalid_argument("unknown sponge: " + name);
            sponges.push_back(grid[i]);
        }
    const std::vector<std::string> heights = opt.heights.empty() ? all_heights() : opt.heights;

    struct Job {
        SpongeParams sponge;
        std::string height;
        ControllerKind kind;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& s : sponges)
        for (const auto& h : heights)
            for (auto k : opt.controllers) {
                // One noise stream per (sponge, height), shared by the controllers.
                const std::uint64_t seed =
                    stage_seed(c, Stage::episodes, index_of(grid_names, s.name) * 16 + index_of(all_heights(), h));
                jobs.push_back({s, h, k, seed});
            }

    std::vector<EpisodeLog> logs(jobs.size());
    parallel_for(jobs.size(), c.threads, [&](std::size_t i) {
        const Job& j = jobs[i];
        logs[i] = run_episode(j.kind, m, j.sponge, test_surface(c, j.height), c.episode, j.seed);
    });

    MatrixRun run;
    for (const auto& log : logs)
        run.bundle.cells.push_back(score_episode(log, reference_for(ref, log.sponge).avg_fz, c.contact_threshold));
    run.bundle.aggregates = aggregate_cells(run.bundle.cells);
    run.bundle.reference = ref;
    run.bundle.config = to_json(c);

    // Plot-ready series: ratio by height per sponge (proposed), and the fz
    // trace of the normal sponge for every controller and height.
    json fig5 = json::object();
    json fig6 = json::object();
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const auto& cell = run.bundle.cells[i];
        if (cell.controller == "proposed")
            fig5[cell.sponge][cell.height] = cell.ratio_pct ? json(*cell.ratio_pct) : json(nullptr);
        if (cell.sponge == "normal") {
            std::vector<double> fz;
            for (const auto& s : logs[i].steps)
                fz.push_back(s.ft[2]);
            fig6[cell.controller][cell.height] = fz;
        }
    }
    run.bundle.plots = {{"ratio_by_height", fig5}, {"fz_series_normal", fig6}};
    if (opt.keep_logs)
        run.logs = std::move(logs);
    return run;
}

std::string AblationReport::to_csv() const
{
    std::ostringstream s;
    s << "axis,label,value,avg_ratio_pct,low_high_gap_n,train_loss\n";
    for (const auto& v : variants)
        s << v.axis << ',' << v.label << ',' << v.value << ',' << format_double(v.avg_ratio) << ','
          << format_double(v.low_high_gap) << ',' << format_double(v.train_loss) << '\n';
    return s.str();
}

json AblationReport::to_json() const
{
    json out = json::array();
    for (const auto& v : variants) {
        ReportBundle b;
        b.cells = v.cells;
        out.push_back({{"axis", v.axis},
                       {"label", v.label},
                       {"value", v.value},
                       {"avg_ratio_pct", v.avg_ratio},
                       {"low_high_gap_n", v.low_high_gap},
                       {"train_loss", v.train_loss},
                       {"cells", wipe::to_json(b)["cells"]}});
    }
    return out;
}

AblationReport run_ablation(const PipelineConfig& c, const Dataset& ds, const TrainedModels& standard,
                            const ReferenceTable& ref)
{
    struct Spec {
        std::string axis, label;
        int value;
    };
    const std::vector<Spec> specs{{"standard", "standard", 0}, {"layers", "fewer", 1}, {"layers", "more", 5},
                                  {"window", "fewer", 1},      {"window", "more", 10}, {"demos", "fewer", 4},
                                  {"demos", "more", 12}};
    MatrixOptions opt;
    opt.sponges = {"normal", "s2f1"};
    opt.heights = {"low", "high"};
    opt.controllers = {ControllerKind::proposed};

    AblationReport rep;
    for (std::size_t vi = 0; vi < specs.size(); ++vi) {
        const Spec& s = specs[vi];
        TrainedModels m = standard;
        double train_loss = 0.0;
        if (s.axis != "standard") {
            FeedbackArch arch = c.arch;
            int demos = c.demo_count;
            if (s.axis == "layers")
                arch.layers = s.value;
            else if (s.axis == "window")
                arch.window = s.value;
            else
                demos = s.value;
            if (demos > static_cast<int>(ds.demos.size()))
                throw std::invalid_argument("ablation: dataset holds fewer than " + std::to_string(demos) + " demos");
            const std::vector<Demonstration> slice(ds.demos.begin(), ds.demos.begin() + demos);
            if (s.axis == "demos")
                fit_demo_stats(m.stats, slice);
            const MatrixXd z = demo_latents(m.vae, ds, m.stats.ft_exp, slice.size());
            Rng rng(stage_seed(c, Stage::ablation, vi));
            m.feedback = make_ft_feedback(rng, arch, m.vae.latent_dim);
            train_loss = train_ft_feedback(m.feedback, make_feedback_set(slice, z, arch.window, m.stats), c.feedback, rng)
                             .final_loss;
        }
        const MatrixRun run = run_matrix(c, m, ref, opt);
        AblationVariant v;
        v.axis = s.axis;
        v.label = s.label;
        v.value = s.axis == "standard" ? 0 : s.value;
        v.cells = run.bundle.cells;
        v.train_loss = train_loss;
        for (const auto& cell : v.cells)
            v.avg_ratio += cell.ratio_pct.value_or(0.0) / static_cast<double>(v.cells.size());
        for (const auto& sp : opt.sponges)
            v.low_high_gap += std::abs(run.bundle.cell(sp, "low", "proposed").avg_fz -
                                       run.bundle.cell(sp, "high", "proposed").avg_fz) /
                              static_cast<double>(opt.sponges.size());
        rep.variants.push_back(std::move(v));
    }
    return rep;
}

void save_models(const std::filesystem::path& dir, const TrainedModels& m)
{
    write_json(dir / "vae.json", to_checkpoint(m.vae));
    write_json(dir / "traj_decoder.json", to_checkpoint(m.traj));
    write_json(dir / "ft_feedback.json", to_checkpoint(m.feedback));
    write_json(dir / "norm_stats.json", to_json(m.stats));
    write_json(dir / "baseline.json",
               {{"open_loop_z", std::vector<double>(m.open_loop_z.data(), m.open_loop_z.data() + m.open_loop_z.size())}});
}

TrainedModels load_models(const std::filesystem::path& dir)
{
    for (const char* f : {"vae.json", "traj_decoder.json", "ft_feedback.json", "norm_stats.json", "baseline.json"})
        if (!std::filesystem::exists(dir / f))
            throw CheckpointError("missing checkpoint file " + (dir / f).string());
    TrainedModels m;
    m.vae = vae_from_checkpoint(read_json(dir / "vae.json"));
    m.traj = traj_decoder_from_checkpoint(read_json(dir / "traj_decoder.json"));
    m.feedback = ft_feedback_from_checkpoint(read_json(dir / "ft_feedback.json"));
    m.stats = model_stats_from_json(read_json(dir / "norm_stats.json"));
    const auto z = read_json(dir / "baseline.json").at("open_loop_z").get<std::vector<double>>();
    m.open_loop_z = Eigen::Map<const VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
    return m;
}

PipelineRun run_pipeline(const PipelineConfig& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    PipelineRun r;
    generate_unlabeled(c, r.dataset);
    generate_demos(c, r.dataset);
    r.stats = fit_stats(c, r.dataset);
    r.pretrain = pretrain(c, r.dataset, r.stats);
    r.train = train(c, r.dataset, r.pretrain.vae, r.stats);
    r.reference = reference_table(c);
    r.matrix = run_matrix(c, r.train.models, r.reference);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

} // namespace wipe
