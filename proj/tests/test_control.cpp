#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wipe/eval/eval.hpp"

#include <cmath>

using namespace wipe;

namespace {

// Small but complete training run shared by the episode tests.
const TrainedModels& models()
{
    static const TrainedModels m = [] {
        PipelineConfig c;
        Dataset ds;
        generate_unlabeled(c, ds);
        generate_demos(c, ds);
        const auto stats = fit_stats(c, ds);
        const auto pre = pretrain(c, ds, stats);
        return train(c, ds, pre.vae, stats).models;
    }();
    return m;
}

const SpongeParams& sponge(const std::string& name)
{
    static const auto grid = make_sponge_grid();
    for (const auto& s : grid)
        if (s.name == name)
            return s;
    throw std::invalid_argument(name);
}

int contact_steps(const EpisodeLog& log)
{
    int n = 0;
    for (const auto& s : log.steps)
        n += s.ft[2] < -0.5;
    return n;
}

} // namespace

TEST_CASE("admittance hand substitution")
{
    AdmittanceGains g;
    CHECK(admittance_dh(0.0, 0.0, 0.0, g) == 0.0);
    CHECK(g.denominator() == doctest::Approx(4.9).epsilon(1e-15));
    // 4.9 * 0.4^2 / 4.9
    CHECK(std::abs(admittance_dh(4.9, 0.0, 0.0, g) - 0.16) < 1e-15);
}

TEST_CASE("admittance iteration converges to f_err / K")
{
    AdmittanceGains g;
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const double f = rng.uniform(-30.0, 30.0);
        double h1 = 0.0, h2 = 0.0;
        for (int i = 0; i < 200; ++i) {
            const double h = admittance_dh(f, h1, h2, g);
            h2 = h1;
            h1 = h;
        }
        CHECK(std::abs(h1 - f / g.K) < 1e-6);
    }
}

TEST_CASE("ac target force")
{
    SpongeParams p{1.0, 500.0, 0.1, 0.03, "t"};
    CHECK(compute_ac_target(p, 0.01) == doctest::Approx(-5.05).epsilon(1e-12));
    CHECK(compute_ac_target(p, 0.0) == 0.0);
    double prev = 0.0;
    for (double k : {100.0, 300.0, 700.0}) {
        p.k = k;
        const double t = std::abs(compute_ac_target(p, 0.01));
        CHECK(t > prev);
        prev = t;
    }
}

TEST_CASE("wall axis swap")
{
    const Eigen::Vector3d p(0.12, -0.05, 0.031);
    const Eigen::Vector3d w = axis_swap_wall(p, 0.51);
    Eigen::Vector3d back = axis_swap_wall(w, 0.0);
    back.z() -= 0.51;
    CHECK((back - p).cwiseAbs().maxCoeff() < 1e-15);

    // Lowering the tool in the table frame moves it along world x, into the wall.
    const Eigen::Vector3d lower = axis_swap_wall(Eigen::Vector3d(0.12, -0.05, 0.021), 0.51);
    CHECK(lower.x() < w.x());
    CHECK(lower.y() == w.y());
    CHECK(lower.z() == w.z());

    MatrixXd xy(2, 2);
    xy << 0.1, 0.2, 0.3, 0.4;
    const MatrixXd cmds = axis_swap_wall(xy, (VectorXd(2) << 0.01, 0.02).finished(), 0.5);
    CHECK(cmds(1, 0) == 0.52);
    CHECK(cmds(1, 2) == 0.3);
}

TEST_CASE("controller names")
{
    for (auto k : {ControllerKind::proposed, ControllerKind::open_loop, ControllerKind::admittance})
        CHECK(controller_from_string(to_string(k)) == k);
    CHECK_THROWS(controller_from_string("pid"));
}

TEST_CASE("open loop replay misses the low table")
{
    PipelineConfig c;
    const auto log = run_episode(ControllerKind::open_loop, models(), sponge("normal"), test_surface(c, "low"),
                                 c.episode, 3);
    REQUIRE(log.steps.size() == 25);
    CHECK(25 - contact_steps(log) >= 13);
}

TEST_CASE("proposed keeps contact on the normal sponge at every height")
{
    PipelineConfig c;
    for (const auto& h : all_heights()) {
        CAPTURE(h);
        const auto log = run_episode(ControllerKind::proposed, models(), sponge("normal"), test_surface(c, h),
                                     c.episode, 4);
        CHECK_FALSE(log.aborted);
        CHECK(contact_steps(log) == 25);
    }
}

TEST_CASE("admittance settles near its target")
{
    PipelineConfig c;
    const double target = compute_ac_target(sponge("normal"), 0.01);
    for (const auto& h : table_heights()) {
        CAPTURE(h);
        const auto log = run_episode(ControllerKind::admittance, models(), sponge("normal"), test_surface(c, h),
                                     c.episode, 5);
        REQUIRE(log.steps.size() == 25);
        double mean = 0.0;
        for (int t = 15; t < 25; ++t)
            mean += log.steps[static_cast<std::size_t>(t)].ft[2] / 10.0;
        CHECK(std::abs(mean - target) <= 0.15 * std::abs(target));
    }
}

TEST_CASE("episodes are reproducible and logs serialize")
{
    PipelineConfig c;
    const auto a = run_episode(ControllerKind::proposed, models(), sponge("s2f2"), test_surface(c, "sloped"),
                               c.episode, 6);
    const auto b = run_episode(ControllerKind::proposed, models(), sponge("s2f2"), test_surface(c, "sloped"),
                               c.episode, 6);
    CHECK(a.to_csv() == b.to_csv());
    const std::string csv = a.to_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);
}

TEST_CASE("safety guard aborts instead of crushing")
{
    PipelineConfig c;
    EpisodeConfig ep = c.episode;
    ep.safety.max_force = 2.0;
    const auto log = run_episode(ControllerKind::proposed, models(), sponge("s3f3"), test_surface(c, "high"), ep, 7);
    CHECK(log.aborted);
    CHECK(log.steps.size() < 25);
    CHECK(log.planned_steps == 25);
}
