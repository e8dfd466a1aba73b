#pragma once

#include "wipe/control/control.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wipe {

inline constexpr double default_contact_threshold = 0.5;

// 100 * |{t : fz_t < -threshold}| / planned steps.
double contact_percentage(const EpisodeLog& log, double threshold = default_contact_threshold);

// 100 * mean(fz) / reference; empty when mean fz >= 0 (no net pressing).
std::optional<double> force_ratio(const EpisodeLog& log, double reference_avg_fz);

double mean_fz(const EpisodeLog& log);
double std_fz(const EpisodeLog& log); // population std within the episode

struct ScenarioResult {
    std::string sponge;
    std::string height;
    std::string controller;
    double contact_pct = 0.0;
    double avg_fz = 0.0;
    double std_fz = 0.0;
    std::optional<double> ratio_pct;
    bool aborted = false;

    bool operator==(const ScenarioResult&) const = default;
};

ScenarioResult score_episode(const EpisodeLog& log, double reference_avg_fz,
                             double threshold = default_contact_threshold);

struct ReferenceEntry {
    std::string sponge;
    double contact_pct = 0.0;
    double avg_fz = 0.0;
    double std_fz = 0.0;

    bool operator==(const ReferenceEntry&) const = default;
};

using ReferenceTable = std::vector<ReferenceEntry>;

struct SpongeDemos {
    SpongeParams sponge;
    std::vector<Demonstration> demos;
};

// Contact, mean and std of raw fz pooled over each sponge's demos.
ReferenceTable build_reference_table(const std::vector<SpongeDemos>& per_sponge,
                                     double threshold = default_contact_threshold);
const ReferenceEntry& reference_for(const ReferenceTable& table, const std::string& sponge);

struct Aggregate {
    std::string controller;
    std::string height; // "all" for the average over the table heights
    double contact_pct = 0.0;
    double ratio_pct = 0.0; // n/a cells count as 0
    int cells = 0;

    bool operator==(const Aggregate&) const = default;
};

struct ReportBundle {
    std::vector<ScenarioResult> cells;
    std::vector<Aggregate> aggregates;
    ReferenceTable reference;
    nlohmann::json plots = nlohmann::json::object();
    nlohmann::json config = nlohmann::json::object();

    bool operator==(const ReportBundle&) const = default;
    const ScenarioResult& cell(const std::string& sponge, const std::string& height, const std::string& controller) const;
    const Aggregate& aggregate(const std::string& controller, const std::string& height) const;
};

// Per controller: one aggregate per height plus "all" over low/high/sloped.
std::vector<Aggregate> aggregate_cells(const std::vector<ScenarioResult>& cells);

nlohmann::json to_json(const ReportBundle& b);
ReportBundle bundle_from_json(const nlohmann::json& j);

std::string results_csv(const ReportBundle& b);
std::vector<ScenarioResult> parse_results_csv(const std::string& text);

// ------------------------------------------------------------- pipeline

struct PipelineConfig {
    std::uint64_t seed = 7;
    int unlabeled_count = 1000;
    int demo_count = 8;
    int extra_demos = 4; // recorded for the 12-demo ablation
    int reference_demos = 3;
    VaeTrainConfig vae;
    TrajTrainConfig traj;
    FeedbackTrainConfig feedback;
    FeedbackArch arch;
    ExpertConfig expert;
    EpisodeConfig episode;
    double low_height = -0.015;
    double high_height = -0.005;
    double sloped_base = -0.01;
    Eigen::Vector2d sloped_gradient{0.0125, 0.0};
    double wall_offset = 0.5;
    double contact_threshold = default_contact_threshold;
    int threads = 0; // 0: hardware concurrency
};

nlohmann::json to_json(const PipelineConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

const std::vector<std::string>& table_heights(); // low, high, sloped
const std::vector<std::string>& all_heights();   // low, high, sloped, wall
SurfaceProfile test_surface(const PipelineConfig& c, const std::string& height);

// Stage seeds derived from the master seed.
enum class Stage : std::uint64_t { unlabeled = 1, demos, pretrain, traj, feedback, reference, episodes, ablation };
std::uint64_t stage_seed(const PipelineConfig& c, Stage s, std::uint64_t index = 0);

void generate_unlabeled(const PipelineConfig& c, Dataset& ds);
void generate_demos(const PipelineConfig& c, Dataset& ds);

// ft_exp from the unlabeled set, demo stats from the first demo_count demos.
ModelStats fit_stats(const PipelineConfig& c, const Dataset& ds);

struct PretrainResult {
    SpongeVAE vae;
    TrainReport report;
};
PretrainResult pretrain(const PipelineConfig& c, const Dataset& ds, const ModelStats& stats);

struct TrainResult {
    TrainedModels models;
    TrainReport traj_report;
    TrainReport feedback_report;
};
// Demo slice [0, n) of the dataset (n defaults to demo_count).
TrainResult train(const PipelineConfig& c, const Dataset& ds, const SpongeVAE& vae, const ModelStats& stats);

// Z_sponge per demo from each demo's own exploratory run.
MatrixXd demo_latents(const SpongeVAE& vae, const Dataset& ds, const NormStats& ft_exp, std::size_t count);

ReferenceTable reference_table(const PipelineConfig& c);

struct MatrixOptions {
    std::vector<std::string> sponges; // empty: all grid sponges
    std::vector<std::string> heights; // empty: all four
    std::vector<ControllerKind> controllers{ControllerKind::proposed, ControllerKind::open_loop,
                                            ControllerKind::admittance};
    bool keep_logs = false;
};

struct MatrixRun {
    ReportBundle bundle;
    std::vector<EpisodeLog> logs; // when keep_logs, same order as cells
};

MatrixRun run_matrix(const PipelineConfig& c, const TrainedModels& m, const ReferenceTable& ref,
                     const MatrixOptions& opt = {});

struct AblationVariant {
    std::string axis;   // standard, layers, window, demos
    std::string label;  // fewer, more, standard
    int value = 0;
    double avg_ratio = 0.0;
    double low_high_gap = 0.0; // mean |avg fz(low) - avg fz(high)| over the two sponges
    std::vector<ScenarioResult> cells;
    double train_loss = 0.0;
};

struct AblationReport {
    std::vector<AblationVariant> variants;
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

AblationReport run_ablation(const PipelineConfig& c, const Dataset& ds, const TrainedModels& standard,
                            const ReferenceTable& ref);

void save_models(const std::filesystem::path& dir, const TrainedModels& m);
TrainedModels load_models(const std::filesystem::path& dir);

// gen -> pretrain -> train -> eval in memory.
struct PipelineRun {
    Dataset dataset;
    ModelStats stats;
    PretrainResult pretrain;
    TrainResult train;
    ReferenceTable reference;
    MatrixRun matrix;
    double seconds = 0.0;
};
PipelineRun run_pipeline(const PipelineConfig& c);

} // namespace wipe
