#include "wipe/data/dataset.hpp"

#include "wipe/data/filter.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace wipe {

FTTrajectory explore_sponge(const SpongeParams& p, std::uint64_t seed, const FilterConfig& filter)
{
    SimConfig cfg;
    cfg.seed = seed;
    FTTrajectory t;
    t.samples = butterworth_lowpass(run_exploratory(p, SurfaceProfile::flat(0.0, "nominal"), cfg), filter.order,
                                    filter.cutoff_hz, filter.fs_hz, false);
    t.rate_hz = 1.0 / cfg.dt;
    t.sponge_name = p.name;
    t.filtered = true;
    return t;
}

UnlabeledSet gen_unlabeled_sim(int n, Rng& rng, const FilterConfig& filter)
{
    if (n < 1)
        throw std::invalid_argument("gen_unlabeled_sim: n must be >= 1");
    UnlabeledSet out;
    while (static_cast<int>(out.trajectories.size()) < n) {
        SpongeParams p = sample_randomized_params(rng);
        p.name = "u" + std::to_string(out.trajectories.size());
        const std::uint64_t seed = rng.next_u64();
        try {
            out.trajectories.push_back(explore_sponge(p, seed, filter));
            out.params.push_back(p);
        } catch (const OverloadFault& e) {
            std::cerr << "gen_unlabeled_sim: resampling " << p.name << " (" << e.what() << ")\n";
        }
    }
    return out;
}

MatrixXd wiping_path(double phase, const ExpertConfig& cfg)
{
    const double w = cfg.path_width;
    const double h = cfg.path_height;
    const double perimeter = 2.0 * (w + h);
    MatrixXd xy(cfg.steps, 2);
    for (int i = 0; i < cfg.steps; ++i) {
        double u = std::fmod((i + phase) / cfg.steps * perimeter, perimeter);
        if (u < 0.0)
            u += perimeter;
        if (u < w)
            xy.row(i) << u, 0.0;
        else if (u < w + h)
            xy.row(i) << w, u - w;
        else if (u < 2.0 * w + h)
            xy.row(i) << w - (u - w - h), h;
        else
            xy.row(i) << 0.0, h - (u - 2.0 * w - h);
    }
    return xy;
}

double target_compression(const SpongeParams& p, const ExpertConfig& cfg)
{
    return std::min(cfg.dstar_fraction * p.rest_thickness, compression_for_force(p, cfg.f_cap));
}

namespace {

Demonstration run_expert(const SpongeParams& p, const SurfaceProfile& profile, const ExpertConfig& cfg,
                         double dstar, const MatrixXd& xy, double start, std::uint64_t sim_seed,
                         std::vector<double>& jitter)
{
    SimConfig sc;
    sc.dt = 1.0 / cfg.rate_hz;
    sc.seed = sim_seed;
    Simulator sim(p, profile, sc);
    const int n = cfg.steps;

    Demonstration d;
    d.xy = xy;
    d.z.resize(n);
    d.dh = VectorXd::Zero(n);
    d.ft.resize(n, 6);
    d.raw_ft.resize(n, 6);
    d.rate_hz = cfg.rate_hz;
    d.sponge_name = p.name;

    std::vector<CausalFilter> filters(6, CausalFilter(cfg.filter.order, cfg.filter.cutoff_hz, cfg.filter.fs_hz));
    const double z0 = surface_height(profile, xy(0, 0), xy(0, 1)) + p.rest_thickness - start;
    sim.reset({{xy(0, 0), xy(0, 1), z0}, Frame::table});
    for (int t = 0; t < n; ++t) {
        if (t == 0) {
            d.z[0] = z0;
        } else {
            const double force = std::max(0.0, -d.ft(t - 1, 2));
            const double err = dstar - compression_for_force(p, force);
            double step = (err > 0.0 ? cfg.gain_press : cfg.gain_ease) * err;
            if (force < cfg.contact_threshold)
                step = std::max(step, cfg.search_step);
            d.z[t] = d.z[t - 1] - step + jitter[static_cast<std::size_t>(t)];
            d.dh[t] = d.z[t] - d.z[t - 1];
        }
        const FTSample f = sim.step({{xy(t, 0), xy(t, 1), d.z[t]}, Frame::table});
        d.raw_ft.row(t) = f.transpose();
        for (int c = 0; c < 6; ++c) {
            if (t == 0)
                filters[static_cast<std::size_t>(c)].reset_steady(f[c]);
            d.ft(t, c) = filters[static_cast<std::size_t>(c)](f[c]);
        }
    }
    return d;
}

} // namespace

Demonstration synth_demonstration(const SpongeParams& sponge, const SurfaceProfile& profile,
                                  const ExpertConfig& cfg, Rng& rng)
{
    const MatrixXd xy = wiping_path(rng.uniform(-cfg.phase_jitter, cfg.phase_jitter), cfg);
    const double start = cfg.fixed_start ? cfg.start_compression : rng.uniform(cfg.start_min, cfg.start_max);
    std::vector<double> jitter(static_cast<std::size_t>(cfg.steps));
    for (auto& j : jitter)
        j = cfg.z_jitter * rng.normal();
    const std::uint64_t sim_seed = rng.next_u64();
    double dstar = target_compression(sponge, cfg);
    for (int attempt = 0;; ++attempt) {
        try {
            return run_expert(sponge, profile, cfg, dstar, xy, std::min(start, dstar), sim_seed, jitter);
        } catch (const OverloadFault&) {
            if (attempt >= 8)
                throw;
            dstar *= 0.8;
        }
    }
}

std::vector<WindowPair> build_demo_windows(const Demonstration& demo, int window)
{
    if (window < 1)
        throw std::invalid_argument("build_demo_windows: window must be >= 1");
    const int n = static_cast<int>(demo.ft.rows());
    std::vector<WindowPair> out;
    for (int t = 0; t + 1 < n; ++t) {
        WindowPair p;
        p.window = MatrixXd::Zero(window, 6);
        for (int r = 0; r < window; ++r) {
            const int src = t - (window - 1) + r;
            if (src >= 0)
                p.window.row(r) = demo.ft.row(src);
        }
        p.dh_next = demo.dh[t + 1];
        p.t = t;
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------- persistence

std::uint64_t fnv1a64(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_double(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

namespace {

namespace fs = std::filesystem;

std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string csv(const std::vector<std::string>& header, const MatrixXd& m)
{
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i)
        s += (i ? "," : "") + header[i];
    s += '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c)
                s += ',';
            s += format_double(m(r, c));
        }
        s += '\n';
    }
    return s;
}

MatrixXd parse_csv(const std::string& text, std::size_t cols, const std::string& name)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw CorruptDataset(name + ": empty file");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p <= end) {
            double v = 0.0;
            const auto r = std::from_chars(p, end, v);
            if (r.ec != std::errc())
                throw CorruptDataset(name + ": unparsable value");
            row.push_back(v);
            p = r.ptr;
            if (p == end)
                break;
            if (*p != ',')
                throw CorruptDataset(name + ": malformed row");
            ++p;
        }
        if (row.size() != cols)
            throw CorruptDataset(name + ": expected " + std::to_string(cols) + " columns");
        rows.push_back(std::move(row));
    }
    MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

const std::vector<std::string> ft_cols{"fx", "fy", "fz", "tx", "ty", "tz"};

std::vector<std::string> with_prefix(const std::string& pre, const std::vector<std::string>& cols)
{
    std::vector<std::string> out;
    for (const auto& c : cols)
        out.push_back(pre + c);
    return out;
}

struct Writer {
    fs::path root;
    nlohmann::json files = nlohmann::json::array();

    void put(const std::string& rel, const std::string& text, Eigen::Index rows)
    {
        const fs::path p = root / rel;
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + p.string());
        out << text;
        files.push_back({{"path", rel}, {"rows", rows}, {"fnv1a64", hex(fnv1a64(text))}});
    }
};

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw CorruptDataset("missing file " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json sponge_json(const SpongeParams& p)
{
    return {{"name", p.name}, {"mu", p.mu}, {"k", p.k}, {"d", p.d}, {"rest_thickness", p.rest_thickness}};
}

SpongeParams sponge_from_json(const nlohmann::json& j)
{
    return {j.at("mu").get<double>(), j.at("k").get<double>(), j.at("d").get<double>(),
            j.at("rest_thickness").get<double>(), j.at("name").get<std::string>()};
}

std::string index_name(std::size_t i)
{
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04zu", i);
    return buf;
}

} // namespace

void save_dataset(const fs::path& dir, const Dataset& ds)
{
    require(ds.unlabeled.trajectories.size() == ds.unlabeled.params.size(), "dataset: unlabeled params mismatch");
    require(ds.demos.size() == ds.demo_exploratory.size() && ds.demos.size() == ds.demo_sponges.size(),
            "dataset: every demo needs one exploratory run and one sponge");
    Writer w{dir};
    nlohmann::json traj_meta = nlohmann::json::array();

    MatrixXd params(static_cast<Eigen::Index>(ds.unlabeled.params.size()), 4);
    for (std::size_t i = 0; i < ds.unlabeled.params.size(); ++i) {
        const auto& p = ds.unlabeled.params[i];
        params.row(static_cast<Eigen::Index>(i)) << p.mu, p.k, p.d, p.rest_thickness;
        const auto& t = ds.unlabeled.trajectories[i];
        w.put("unlabeled/" + index_name(i) + ".csv", csv(ft_cols, t.samples), t.samples.rows());
        traj_meta.push_back(
            {{"sponge_name", t.sponge_name}, {"filtered", t.filtered}, {"normalized", t.normalized}, {"rate_hz", t.rate_hz}});
    }
    if (!ds.unlabeled.params.empty())
        w.put("unlabeled/params.csv", csv({"mu", "k", "d", "rest_thickness"}, params), params.rows());

    nlohmann::json demo_meta = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.demos.size(); ++i) {
        const auto& d = ds.demos[i];
        const Eigen::Index n = d.xy.rows();
        MatrixXd m(n, 5 + 12);
        m.col(0) = VectorXd::LinSpaced(n, 0.0, (n - 1) / d.rate_hz);
        m.middleCols(1, 2) = d.xy;
        m.col(3) = d.z;
        m.col(4) = d.dh;
        m.middleCols(5, 6) = d.ft;
        m.middleCols(11, 6) = d.raw_ft;
        std::vector<std::string> header{"t", "x", "y", "z", "dh"};
        for (const auto& c : ft_cols)
            header.push_back(c);
        for (const auto& c : with_prefix("raw_", ft_cols))
            header.push_back(c);
        w.put("demos/" + index_name(i) + ".csv", csv(header, m), n);
        const auto& e = ds.demo_exploratory[i];
        w.put("demos/" + index_name(i) + "_explore.csv", csv(ft_cols, e.samples), e.samples.rows());
        demo_meta.push_back({{"sponge", sponge_json(ds.demo_sponges[i])},
                             {"rate_hz", d.rate_hz},
                             {"explore", {{"sponge_name", e.sponge_name}, {"filtered", e.filtered},
                                          {"normalized", e.normalized}, {"rate_hz", e.rate_hz}}}});
    }

    nlohmann::json manifest{{"schema_version", dataset_schema_version},
                            {"seeds", ds.seeds},
                            {"counts", {{"unlabeled", ds.unlabeled.trajectories.size()}, {"demos", ds.demos.size()}}},
                            {"config", ds.config},
                            {"config_hash", hex(fnv1a64(ds.config.dump()))},
                            {"unlabeled", traj_meta},
                            {"demos", demo_meta},
                            {"files", w.files}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(1) << '\n';
}

Dataset load_dataset(const fs::path& dir)
{
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptDataset(std::string("manifest: ") + e.what());
    }
    if (manifest.value("schema_version", -1) != dataset_schema_version)
        throw CorruptDataset("manifest: unsupported schema_version");

    std::map<std::string, std::string> contents;
    for (const auto& f : manifest.at("files")) {
        const std::string rel = f.at("path").get<std::string>();
        std::string text = read_file(dir / rel);
        if (hex(fnv1a64(text)) != f.at("fnv1a64").get<std::string>())
            throw CorruptDataset(rel + ": checksum mismatch");
        contents[rel] = std::move(text);
    }
    auto load = [&](const std::string& rel, std::size_t cols) {
        auto it = contents.find(rel);
        if (it == contents.end())
            throw CorruptDataset(rel + ": not listed in manifest");
        MatrixXd m = parse_csv(it->second, cols, rel);
        for (const auto& f : manifest.at("files"))
            if (f.at("path") == rel && f.at("rows").get<Eigen::Index>() != m.rows())
                throw CorruptDataset(rel + ": row count mismatch");
        return m;
    };

    Dataset ds;
    ds.seeds = manifest.at("seeds");
    ds.config = manifest.at("config");
    const auto& um = manifest.at("unlabeled");
    if (!um.empty()) {
        const MatrixXd params = load("unlabeled/params.csv", 4);
        if (params.rows() != static_cast<Eigen::Index>(um.size()))
            throw CorruptDataset("unlabeled/params.csv: count mismatch");
        for (std::size_t i = 0; i < um.size(); ++i) {
            FTTrajectory t;
            t.samples = load("unlabeled/" + index_name(i) + ".csv", 6);
            t.sponge_name = um[i].at("sponge_name").get<std::string>();
            t.filtered = um[i].at("filtered").get<bool>();
            t.normalized = um[i].at("normalized").get<bool>();
            t.rate_hz = um[i].at("rate_hz").get<double>();
            ds.unlabeled.trajectories.push_back(std::move(t));
            const auto r = params.row(static_cast<Eigen::Index>(i));
            ds.unlabeled.params.push_back({r[0], r[1], r[2], r[3], ds.unlabeled.trajectories.back().sponge_name});
        }
    }
    const auto& dm = manifest.at("demos");
    for (std::size_t i = 0; i < dm.size(); ++i) {
        const MatrixXd m = load("demos/" + index_name(i) + ".csv", 17);
        Demonstration d;
        d.xy = m.middleCols(1, 2);
        d.z = m.col(3);
        d.dh = m.col(4);
        d.ft = m.middleCols(5, 6);
        d.raw_ft = m.middleCols(11, 6);
        d.rate_hz = dm[i].at("rate_hz").get<double>();
        ds.demo_sponges.push_back(sponge_from_json(dm[i].at("sponge")));
        d.sponge_name = ds.demo_sponges.back().name;
        ds.demos.push_back(std::move(d));
        FTTrajectory e;
        e.samples = load("demos/" + index_name(i) + "_explore.csv", 6);
        const auto& em = dm[i].at("explore");
        e.sponge_name = em.at("sponge_name").get<std::string>();
        e.filtered = em.at("filtered").get<bool>();
        e.normalized = em.at("normalized").get<bool>();
        e.rate_hz = em.at("rate_hz").get<double>();
        ds.demo_exploratory.push_back(std::move(e));
    }
    const auto& counts = manifest.at("counts");
    if (counts.at("unlabeled").get<std::size_t>() != ds.unlabeled.trajectories.size() ||
        counts.at("demos").get<std::size_t>() != ds.demos.size())
        throw CorruptDataset("manifest: counts do not match contents");
    return ds;
}

} // namespace wipe
