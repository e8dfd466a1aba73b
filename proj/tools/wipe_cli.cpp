#include "wipe/eval/eval.hpp"
#include "wipe/nn/checkpoint.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Paths {
    fs::path root;
    fs::path data() const { return root / "data"; }
    fs::path models() const { return root / "models"; }
    fs::path bundle() const { return root / "bundle.json"; }
    fs::path ablation_json() const { return root / "ablation.json"; }
};

// Write to a sibling temp file and rename, so a failed run never leaves a
// half-written artifact behind.
void write_text(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << text;
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), {}};
}

wipe::Dataset load_or_empty(const fs::path& dir)
{
    return fs::exists(dir / "manifest.json") ? wipe::load_dataset(dir) : wipe::Dataset{};
}

wipe::Dataset require_dataset(const Paths& p, const wipe::PipelineConfig& c)
{
    auto ds = wipe::load_dataset(p.data());
    if (ds.unlabeled.trajectories.empty())
        throw std::runtime_error("dataset has no unlabeled trajectories; run gen-unlabeled");
    if (static_cast<int>(ds.demos.size()) < c.demo_count)
        throw std::runtime_error("dataset has too few demonstrations; run gen-demos");
    return ds;
}

void save_data(const Paths& p, const wipe::Dataset& ds)
{
    // Saving into a fresh directory and swapping keeps the old dataset intact on failure.
    const fs::path tmp = p.data().string() + ".tmp";
    fs::remove_all(tmp);
    wipe::save_dataset(tmp, ds);
    if (fs::exists(p.data() / "norm_stats.json"))
        fs::copy_file(p.data() / "norm_stats.json", tmp / "norm_stats.json");
    fs::remove_all(p.data());
    fs::rename(tmp, p.data());
}

void write_report(const Paths& p, const wipe::ReportBundle& b)
{
    json plots = b.plots;
    if (fs::exists(p.ablation_json())) {
        json series = json::array();
        for (const auto& v : json::parse(read_text(p.ablation_json())))
            series.push_back({{"axis", v.at("axis")}, {"label", v.at("label")}, {"value", v.at("value")},
                              {"avg_ratio_pct", v.at("avg_ratio_pct")}});
        plots["ablation_ratio"] = series;
    }
    write_text(p.root / "results.csv", wipe::results_csv(b));
    write_text(p.root / "plots.json", plots.dump(2) + "\n");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sponge wiping: data generation, training and evaluation"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::string out_dir = "out";
    app.add_option("--seed", seed, "master seed (overrides the config)");
    app.add_option("--config", config_path, "pipeline config JSON")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");

    auto* gen_unlabeled = app.add_subcommand("gen-unlabeled", "simulate randomized exploratory trajectories");
    auto* gen_demos = app.add_subcommand("gen-demos", "record scripted demonstrations");
    auto* pretrain = app.add_subcommand("pretrain", "fit normalization and pretrain the sponge VAE");
    auto* train = app.add_subcommand("train", "train the trajectory decoder and force feedback model");
    auto* eval = app.add_subcommand("eval", "run the scenario matrix");
    auto* ablate = app.add_subcommand("ablate", "retrain feedback variants and evaluate the sub-matrix");
    auto* report = app.add_subcommand("report", "render results.csv and plots.json");
    auto* run = app.add_subcommand("run", "every stage in order");

    CLI11_PARSE(app, argc, argv);

    try {
        wipe::PipelineConfig cfg;
        if (!config_path.empty())
            cfg = wipe::pipeline_config_from_json(json::parse(read_text(config_path)));
        if (seed)
            cfg.seed = *seed;
        const Paths p{out_dir};
        const bool all = run->parsed();

        if (all || gen_unlabeled->parsed()) {
            auto ds = all ? wipe::Dataset{} : load_or_empty(p.data());
            wipe::generate_unlabeled(cfg, ds);
            save_data(p, ds);
            std::cout << "unlabeled: " << ds.unlabeled.trajectories.size() << " trajectories\n";
        }
        if (all || gen_demos->parsed()) {
            auto ds = load_or_empty(p.data());
            wipe::generate_demos(cfg, ds);
            save_data(p, ds);
            std::cout << "demos: " << ds.demos.size() << "\n";
        }
        if (all || pretrain->parsed()) {
            const auto ds = require_dataset(p, cfg);
            const auto stats = wipe::fit_stats(cfg, ds);
            const auto r = wipe::pretrain(cfg, ds, stats);
            wipe::write_json(p.data() / "norm_stats.json", wipe::to_json(stats));
            wipe::write_json(p.models() / "vae.json", wipe::to_checkpoint(r.vae));
            write_text(p.models() / "vae_train.csv", r.report.to_csv());
            std::cout << "pretrain: final loss " << r.report.final_loss << "\n";
        }
        if (all || train->parsed()) {
            const auto ds = require_dataset(p, cfg);
            if (!fs::exists(p.models() / "vae.json") || !fs::exists(p.data() / "norm_stats.json"))
                throw std::runtime_error("missing pretrained VAE or norm stats; run pretrain");
            const auto stats = wipe::model_stats_from_json(wipe::read_json(p.data() / "norm_stats.json"));
            const auto vae = wipe::vae_from_checkpoint(wipe::read_json(p.models() / "vae.json"));
            const auto r = wipe::train(cfg, ds, vae, stats);
            wipe::save_models(p.models(), r.models);
            write_text(p.models() / "traj_train.csv", r.traj_report.to_csv());
            write_text(p.models() / "feedback_train.csv", r.feedback_report.to_csv());
            std::cout << "train: traj " << r.traj_report.final_loss << ", feedback " << r.feedback_report.final_loss
                      << "\n";
        }
        if (all || eval->parsed()) {
            const auto models = wipe::load_models(p.models());
            const auto ref = wipe::reference_table(cfg);
            const auto m = wipe::run_matrix(cfg, models, ref);
            write_text(p.bundle(), wipe::to_json(m.bundle).dump(2) + "\n");
            std::cout << "eval: " << m.bundle.cells.size() << " cells\n";
        }
        if (all || ablate->parsed()) {
            const auto ds = require_dataset(p, cfg);
            const auto models = wipe::load_models(p.models());
            const auto ref = wipe::reference_table(cfg);
            const auto rep = wipe::run_ablation(cfg, ds, models, ref);
            write_text(p.root / "ablation.csv", rep.to_csv());
            write_text(p.ablation_json(), rep.to_json().dump(2) + "\n");
            std::cout << "ablate: " << rep.variants.size() << " variants\n";
        }
        if (all || report->parsed()) {
            const auto b = wipe::bundle_from_json(json::parse(read_text(p.bundle())));
            write_report(p, b);
            for (const auto& a : b.aggregates)
                if (a.height == "all")
                    std::cout << a.controller << ": contact " << a.contact_pct << "%, ratio " << a.ratio_pct << "%\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
