#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wipe/data/dataset.hpp"
#include "wipe/data/filter.hpp"

#include <cmath>
#include <complex>
#include <fstream>

using namespace wipe;
namespace fs = std::filesystem;

namespace {

const double pi = std::acos(-1.0);

// Least-squares amplitude of a sinusoid of frequency f over the tail of y.
double fitted_amplitude(const std::vector<double>& y, double f, double fs, std::size_t from)
{
    Eigen::MatrixXd a(static_cast<Eigen::Index>(y.size() - from), 2);
    Eigen::VectorXd b(a.rows());
    for (std::size_t i = from; i < y.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i - from);
        a(r, 0) = std::sin(2 * pi * f * static_cast<double>(i) / fs);
        a(r, 1) = std::cos(2 * pi * f * static_cast<double>(i) / fs);
        b[r] = y[i];
    }
    const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
    return c.norm();
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("wipe_test_data_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("butterworth constant and zero signals")
{
    const std::vector<double> c(300, 2.5), z(300, 0.0);
    for (bool causal : {true, false}) {
        const auto yc = butterworth_lowpass(c, 2, 5.0, 100.0, causal);
        CHECK(std::abs(yc.back() - 2.5) < 1e-12);
        for (double v : butterworth_lowpass(z, 2, 5.0, 100.0, causal))
            CHECK(v == 0.0);
    }
}

TEST_CASE("order-2 causal butterworth passes 0.707 at the cutoff")
{
    const double fs = 100.0, fc = 5.0;
    std::vector<double> x(2000);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::sin(2 * pi * fc * static_cast<double>(i) / fs);
    const double amp = fitted_amplitude(butterworth_lowpass(x, 2, fc, fs, true), fc, fs, 1000);
    // Analytic magnitude of the pre-warped bilinear design at the cutoff.
    CHECK(std::abs(amp - 1.0 / std::sqrt(2.0)) < 0.02);

    // Same magnitude from the designed coefficients, |H(e^{jw})|.
    const std::complex<double> zinv = std::polar(1.0, -2 * pi * fc / fs);
    std::complex<double> h = 1.0;
    for (const auto& s : butterworth_sections(2, fc, fs))
        h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) / (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
    CHECK(std::abs(std::abs(h) - amp) < 1e-3);
}

TEST_CASE("causal filter output ignores the future")
{
    Rng rng(3);
    std::vector<double> x(120);
    for (auto& v : x)
        v = rng.normal();
    auto y = butterworth_lowpass(x, 2, 0.8, 2.5, true);
    auto x2 = x;
    for (std::size_t i = 60; i < x2.size(); ++i)
        x2[i] = rng.normal();
    auto y2 = butterworth_lowpass(x2, 2, 0.8, 2.5, true);
    for (std::size_t i = 0; i < 60; ++i)
        CHECK(y[i] == y2[i]);
}

TEST_CASE("butterworth rejects bad parameters")
{
    CHECK_THROWS_AS(butterworth_sections(2, 50.0, 100.0), std::invalid_argument);
    CHECK_THROWS_AS(butterworth_sections(0, 5.0, 100.0), std::invalid_argument);
    CHECK_THROWS_AS(butterworth_sections(2, -1.0, 100.0), std::invalid_argument);
}

TEST_CASE("normalization")
{
    MatrixXd d(3, 2);
    d << 0, -4, 1, 6, 2, 16;
    const auto s = fit_norm_stats(d);
    CHECK(normalize(0.0, s, 0) == 0.0);
    CHECK(normalize(2.0, s, 0) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(normalize(6.0, s, 1) == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(normalize(5.0, s, 0) == 0.9);
    CHECK(normalize(-5.0, s, 0) == 0.0);

    Rng rng(4);
    MatrixXd x(50, 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        x(i, 0) = rng.uniform(0, 2);
        x(i, 1) = rng.uniform(-4, 16);
    }
    CHECK((denormalize(normalize(x, s), s) - x).cwiseAbs().maxCoeff() < 1e-12);

    const auto back = norm_stats_from_json(nlohmann::json::parse(to_json(s).dump()));
    CHECK(back.min == s.min);
    CHECK(back.max == s.max);

    MatrixXd flat = MatrixXd::Ones(4, 1);
    CHECK_THROWS_AS(fit_norm_stats(flat), DegenerateChannel);
}

TEST_CASE("unlabeled generation")
{
    Rng a(11), b(11);
    const auto s1 = gen_unlabeled_sim(1, a);
    const auto s2 = gen_unlabeled_sim(1, b);
    REQUIRE(s1.trajectories.size() == 1);
    CHECK(s1.trajectories[0].samples.rows() == 400);
    CHECK(s1.trajectories[0].samples.cols() == 6);

    Dataset d1, d2;
    d1.unlabeled = s1;
    d2.unlabeled = s2;
    const auto p1 = scratch("one_a"), p2 = scratch("one_b");
    save_dataset(p1, d1);
    save_dataset(p2, d2);
    CHECK(slurp(p1 / "unlabeled" / "0000.csv") == slurp(p2 / "unlabeled" / "0000.csv"));
    CHECK(slurp(p1 / "manifest.json") == slurp(p2 / "manifest.json"));
}

TEST_CASE("demonstrations")
{
    const auto grid = make_sponge_grid();
    ExpertConfig cfg;
    const auto demo_surface = SurfaceProfile::sloped(0.0, {0.1, 0.0}, "demo");
    Rng rng(5);
    const auto d = synth_demonstration(grid[0], demo_surface, cfg, rng);
    CHECK(d.xy.rows() == 25);
    CHECK(d.xy.cols() == 2);
    CHECK(d.dh.size() == 25);
    CHECK(d.dh[0] == 0.0);
    for (int t = 1; t < 25; ++t)
        CHECK(d.dh[t] == d.z[t] - d.z[t - 1]);

    // Reference-style demos start in contact and stay there.
    ExpertConfig fixed = cfg;
    fixed.fixed_start = true;
    auto mean_abs_fz = [&](const SpongeParams& p) {
        double m = 0.0;
        for (int i = 0; i < 3; ++i) {
            Rng r(100 + static_cast<std::uint64_t>(i));
            const auto demo = synth_demonstration(p, demo_surface, fixed, r);
            for (int t = 0; t < 25; ++t)
                CHECK(demo.raw_ft(t, 2) < -0.5);
            m += std::abs(demo.raw_ft.col(2).mean()) / 3;
        }
        return m;
    };
    const SpongeParams* s1f1 = nullptr;
    const SpongeParams* s3f3 = nullptr;
    for (const auto& s : grid) {
        if (s.name == "s1f1")
            s1f1 = &s;
        if (s.name == "s3f3")
            s3f3 = &s;
    }
    REQUIRE(s1f1);
    REQUIRE(s3f3);
    CHECK(mean_abs_fz(*s3f3) > mean_abs_fz(*s1f1));
}

TEST_CASE("demo windows")
{
    Rng rng(6);
    const auto d = synth_demonstration(make_sponge_grid()[0], SurfaceProfile::sloped(0.0, {0.1, 0.0}), ExpertConfig{}, rng);
    const auto w5 = build_demo_windows(d, 5);
    REQUIRE(w5.size() == 24);
    CHECK(w5[0].window.topRows(4).isZero(0.0));
    CHECK(w5[0].window.row(4) == d.ft.row(0));
    for (std::size_t i = 0; i < w5.size(); ++i) {
        const int t = static_cast<int>(i);
        CHECK(w5[i].t == t);
        CHECK(w5[i].dh_next == d.dh[t + 1]);
        CHECK(w5[i].window.row(4) == d.ft.row(t));
    }
    CHECK(w5[10].window == d.ft.middleRows(6, 5));
    const auto w1 = build_demo_windows(d, 1);
    REQUIRE(w1.size() == 24);
    CHECK(w1[3].window.rows() == 1);
    CHECK(w1[3].window.row(0) == d.ft.row(3));
    CHECK(w1[3].dh_next == d.dh[4]);
}

TEST_CASE("dataset round trip and corruption")
{
    Rng rng(7);
    Dataset ds;
    ds.unlabeled = gen_unlabeled_sim(1000, rng);
    const auto demo_surface = SurfaceProfile::sloped(0.0, {0.1, 0.0});
    for (int i = 0; i < 3; ++i) {
        ds.demos.push_back(synth_demonstration(make_sponge_grid()[0], demo_surface, ExpertConfig{}, rng));
        ds.demo_exploratory.push_back(explore_sponge(make_sponge_grid()[0], rng.next_u64()));
        ds.demo_sponges.push_back(make_sponge_grid()[0]);
    }
    ds.seeds["demo"] = 7;
    const auto dir = scratch("roundtrip");
    save_dataset(dir, ds);
    CHECK(nlohmann::json::parse(slurp(dir / "manifest.json")).at("counts").at("unlabeled") == 1000);

    const Dataset back = load_dataset(dir);
    REQUIRE(back.unlabeled.trajectories.size() == 1000);
    for (std::size_t i = 0; i < 1000; ++i) {
        CHECK(back.unlabeled.trajectories[i].samples == ds.unlabeled.trajectories[i].samples);
        CHECK(back.unlabeled.params[i].k == ds.unlabeled.params[i].k);
    }
    REQUIRE(back.demos.size() == 3);
    CHECK(back.demos[1].ft == ds.demos[1].ft);
    CHECK(back.demos[1].raw_ft == ds.demos[1].raw_ft);
    CHECK(back.demos[1].dh == ds.demos[1].dh);
    CHECK(back.demos[1].xy == ds.demos[1].xy);
    CHECK(back.demo_exploratory[2].samples == ds.demo_exploratory[2].samples);
    CHECK(back.seeds == ds.seeds);

    SUBCASE("truncated file")
    {
        const auto f = dir / "unlabeled" / "0003.csv";
        const auto text = slurp(f);
        std::ofstream(f, std::ios::binary) << text.substr(0, text.size() / 2);
        CHECK_THROWS_AS(load_dataset(dir), CorruptDataset);
    }
    SUBCASE("missing file")
    {
        fs::remove(dir / "demos" / "0001.csv");
        CHECK_THROWS_AS(load_dataset(dir), CorruptDataset);
    }
    SUBCASE("flipped byte")
    {
        const auto f = dir / "demos" / "0000.csv";
        auto text = slurp(f);
        text[text.size() - 3] = text[text.size() - 3] == '1' ? '2' : '1';
        std::ofstream(f, std::ios::binary) << text;
        CHECK_THROWS_AS(load_dataset(dir), CorruptDataset);
    }
}
