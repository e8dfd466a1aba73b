#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wipe/eval/eval.hpp"
#include "wipe/nn/checkpoint.hpp"

#include <cmath>

using namespace wipe;
namespace fs = std::filesystem;

namespace {

EpisodeLog log_from(const std::vector<double>& fz, const std::string& controller = "proposed",
                    const std::string& sponge = "normal", const std::string& height = "low")
{
    EpisodeLog log;
    log.planned_steps = 25;
    log.controller = controller;
    log.sponge = sponge;
    log.profile = height;
    for (std::size_t t = 0; t < fz.size(); ++t) {
        EpisodeStep s;
        s.t = static_cast<double>(t) / 2.5;
        s.ft[2] = fz[t];
        log.steps.push_back(s);
    }
    return log;
}

std::vector<ScenarioResult> random_cells(Rng& rng)
{
    std::vector<ScenarioResult> cells;
    for (const char* ctl : {"proposed", "open_loop", "admittance"})
        for (const char* sp : {"normal", "s1f1", "s3f3"})
            for (const auto& h : all_heights()) {
                ScenarioResult r;
                r.sponge = sp;
                r.height = h;
                r.controller = ctl;
                r.contact_pct = 4.0 * static_cast<double>(rng.below(26));
                r.avg_fz = rng.uniform(-20, 2);
                r.std_fz = rng.uniform(0, 3);
                if (r.avg_fz < 0)
                    r.ratio_pct = rng.uniform(0, 200);
                r.aborted = rng.below(10) == 0;
                cells.push_back(r);
            }
    return cells;
}

} // namespace

TEST_CASE("contact percentage")
{
    CHECK(contact_percentage(log_from(std::vector<double>(25, 0.0))) == 0.0);
    CHECK(contact_percentage(log_from(std::vector<double>(25, -10.0))) == 100.0);
    std::vector<double> six(25, 0.0);
    for (int i = 0; i < 6; ++i)
        six[static_cast<std::size_t>(3 * i)] = -4.0;
    CHECK(contact_percentage(log_from(six)) == doctest::Approx(24.0));
    EpisodeLog empty;
    empty.planned_steps = 0;
    CHECK_THROWS(contact_percentage(empty));
    CHECK_THROWS(contact_percentage(log_from(six), 0.0));

    // Aborted after 10 pressing steps: the denominator stays at 25.
    CHECK(contact_percentage(log_from(std::vector<double>(10, -5.0))) == 40.0);
}

TEST_CASE("contact percentage ignores small noise")
{
    Rng rng(1);
    std::vector<double> fz(25);
    for (auto& v : fz)
        v = -10.0 + rng.uniform(-0.1, 0.1);
    CHECK(contact_percentage(log_from(fz)) == contact_percentage(log_from(std::vector<double>(25, -10.0))));
}

TEST_CASE("force ratio")
{
    CHECK(*force_ratio(log_from(std::vector<double>(25, -12.6)), -12.6) == doctest::Approx(100.0));
    CHECK(std::round(*force_ratio(log_from(std::vector<double>(25, -6.79)), -12.6)) == 54.0);
    CHECK_FALSE(force_ratio(log_from(std::vector<double>(25, 1.64)), -12.6).has_value());
    CHECK_THROWS(force_ratio(log_from(std::vector<double>(25, -1.0)), 0.0));
}

TEST_CASE("score and std")
{
    const auto r = score_episode(log_from({-1, -3, -1, -3}), -2.0);
    CHECK(r.avg_fz == -2.0);
    CHECK(r.std_fz == 1.0);
    CHECK(*r.ratio_pct == 100.0);
    CHECK(r.contact_pct == 16.0);
}

TEST_CASE("reference table from scripted demos")
{
    PipelineConfig c;
    const auto t = reference_table(c);
    REQUIRE(t.size() == 10);
    for (const auto& e : t) {
        CAPTURE(e.sponge);
        CHECK(e.contact_pct == 100.0);
        CHECK(e.avg_fz < 0.0);
    }
    CHECK(std::abs(reference_for(t, "s3f3").avg_fz) > std::abs(reference_for(t, "s1f1").avg_fz));
    CHECK(reference_table(c) == t);
    CHECK_THROWS(reference_for(t, "s9f9"));
    CHECK_THROWS(build_reference_table({SpongeDemos{make_sponge_grid()[0], {}}}));
}

TEST_CASE("aggregates are cell means")
{
    Rng rng(2);
    const auto cells = random_cells(rng);
    const auto aggs = aggregate_cells(cells);
    for (const auto& a : aggs) {
        double contact = 0.0, ratio = 0.0;
        int n = 0;
        for (const auto& c : cells) {
            const bool in_height = a.height == "all" ? c.height != "wall" : c.height == a.height;
            if (c.controller == a.controller && in_height) {
                contact += c.contact_pct;
                ratio += c.ratio_pct.value_or(0.0);
                ++n;
            }
        }
        CAPTURE(a.controller);
        CAPTURE(a.height);
        CHECK(a.cells == n);
        CHECK(std::abs(a.contact_pct - contact / n) < 1e-12);
        CHECK(std::abs(a.ratio_pct - ratio / n) < 1e-12);
    }
    CHECK(aggs.size() == 3 * 5);
}

TEST_CASE("report bundle round trips")
{
    Rng rng(3);
    ReportBundle b;
    b.cells = random_cells(rng);
    b.aggregates = aggregate_cells(b.cells);
    b.reference = {{"normal", 100.0, -4.5, 0.9}, {"s1f1", 96.0, -2.25, 0.5}};
    b.plots = {{"series", {1.0, 2.5}}};
    b.config = to_json(PipelineConfig{});
    const auto back = bundle_from_json(nlohmann::json::parse(to_json(b).dump()));
    CHECK(back == b);

    const std::string csv = results_csv(b);
    CHECK(csv.substr(0, csv.find('\n')) == "sponge,height,controller,contact_pct,avg_fz,std_fz,ratio_pct,aborted");
    CHECK(parse_results_csv(csv) == b.cells);
    CHECK(results_csv(back) == csv);
}

TEST_CASE("pipeline config json")
{
    PipelineConfig c;
    c.seed = 99;
    c.arch.window = 10;
    c.expert.gain_press = 0.7;
    c.sloped_gradient = {0.02, 0.01};
    const auto back = pipeline_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.arch.window == 10);
    CHECK(back.sloped_gradient.y() == 0.01);

    const auto partial = pipeline_config_from_json(nlohmann::json::parse(R"({"seed": 3, "vae": {"epochs": 5}})"));
    CHECK(partial.seed == 3);
    CHECK(partial.vae.epochs == 5);
    CHECK(partial.vae.lr == 1e-4);

    CHECK_THROWS(pipeline_config_from_json(nlohmann::json::parse(R"({"sed": 3})")));
    CHECK_THROWS(pipeline_config_from_json(nlohmann::json::parse(R"({"vae": {"epoch": 3}})")));
    CHECK_THROWS(pipeline_config_from_json(nlohmann::json::parse(R"({"demo_count": 0})")));
    CHECK_THROWS(pipeline_config_from_json(nlohmann::json::parse(R"({"episode": {"gains": {"M": -10}}})")));
}

TEST_CASE("test surfaces and stage seeds")
{
    PipelineConfig c;
    CHECK(surface_height(test_surface(c, "high"), 0.1, 0.0) - surface_height(test_surface(c, "low"), 0.1, 0.0) ==
          doctest::Approx(0.01));
    CHECK(test_surface(c, "wall").kind == SurfaceProfile::Kind::wall);
    CHECK_THROWS(test_surface(c, "ceiling"));
    CHECK(stage_seed(c, Stage::demos, 0) != stage_seed(c, Stage::demos, 1));
    CHECK(stage_seed(c, Stage::demos, 0) != stage_seed(c, Stage::traj, 0));
    PipelineConfig d = c;
    d.seed = 8;
    CHECK(stage_seed(c, Stage::pretrain) != stage_seed(d, Stage::pretrain));
}

TEST_CASE("models save and load")
{
    Rng rng(4);
    TrainedModels m;
    m.vae = make_vae(rng);
    m.traj = make_traj_decoder(rng);
    m.feedback = make_ft_feedback(rng);
    MatrixXd a = MatrixXd::Random(10, 6), xy = MatrixXd::Random(10, 2), dh = MatrixXd::Random(10, 1);
    m.stats.ft_exp = fit_norm_stats(a);
    m.stats.ft_demo = fit_norm_stats(a);
    m.stats.xy = fit_norm_stats(xy);
    m.stats.dh = fit_norm_stats(dh);
    m.open_loop_z = VectorXd::LinSpaced(25, 0.0, 0.02);
    const fs::path dir = fs::temp_directory_path() / "wipe_test_models";
    fs::remove_all(dir);
    save_models(dir, m);
    const auto back = load_models(dir);
    CHECK(back.vae.enc_head.weights == m.vae.enc_head.weights);
    CHECK(back.feedback.hidden.weights == m.feedback.hidden.weights);
    CHECK(back.traj.layer.bias == m.traj.layer.bias);
    CHECK(back.stats.dh.max == m.stats.dh.max);
    CHECK(back.open_loop_z == m.open_loop_z);

    fs::remove(dir / "ft_feedback.json");
    CHECK_THROWS_AS(load_models(dir), CheckpointError);
}

TEST_CASE("ablation report layout")
{
    AblationReport r;
    for (const char* axis : {"standard", "layers", "layers"}) {
        AblationVariant v;
        v.axis = axis;
        v.label = "x";
        v.avg_ratio = 88.5;
        r.variants.push_back(v);
    }
    const std::string csv = r.to_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(r.to_json().size() == 3);
}
