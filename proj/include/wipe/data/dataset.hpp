#pragma once

#include "wipe/data/norm.hpp"
#include "wipe/sim/sponge_sim.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace wipe {

struct FTTrajectory {
    MatrixXd samples; // 400 x 6
    double rate_hz = 100.0;
    std::string sponge_name;
    bool filtered = false;
    bool normalized = false;
};

struct FilterConfig {
    int order = 2;
    double cutoff_hz = 5.0;
    double fs_hz = 100.0;
};

struct ExpertConfig {
    int steps = 25;
    double rate_hz = 2.5;
    // Rectangle perimeter path, traversed once over the demonstration.
    double path_width = 0.2;
    double path_height = 0.1;
    double phase_jitter = 0.15; // uniform, in path steps
    // Target compression min(dstar_fraction * rest, compression at f_cap).
    double dstar_fraction = 0.5;
    double f_cap = 40.0;
    // Proportional loop on the filtered fz, through the inverse spring law.
    double gain_press = 0.5;
    double gain_ease = 0.3;
    double search_step = 0.02;
    double contact_threshold = 0.5;
    double z_jitter = 0.0015;
    // Initial compression ~ U[start_min, start_max] unless fixed_start is set.
    double start_min = -0.01;
    double start_max = 0.025;
    bool fixed_start = false;
    double start_compression = 0.008; // reference demos; 1.2 N on the softest grid sponge
    FilterConfig filter{2, 0.8, 2.5};
};

struct Demonstration {
    MatrixXd xy;     // 25 x 2, absolute
    VectorXd dh;     // 25, z[t] - z[t-1], dh[0] = 0
    MatrixXd ft;     // 25 x 6, causally filtered
    MatrixXd raw_ft; // 25 x 6, as sensed
    VectorXd z;      // 25, absolute commanded height
    double rate_hz = 2.5;
    std::string sponge_name;
};

struct WindowPair {
    MatrixXd window; // window x 6, physical units, zero rows before the start
    double dh_next = 0.0;
    int t = 0;
};

// Filtered exploratory run of one sponge on the nominal flat surface.
FTTrajectory explore_sponge(const SpongeParams& p, std::uint64_t seed, const FilterConfig& filter = {});

struct UnlabeledSet {
    std::vector<FTTrajectory> trajectories;
    std::vector<SpongeParams> params; // ground truth, never shown to policies
};

// n randomized sponges, one filtered exploratory run each. Draws whose run
// overloads the sensor are resampled.
UnlabeledSet gen_unlabeled_sim(int n, Rng& rng, const FilterConfig& filter = {});

// Rectangle-perimeter wiping path with a phase offset in steps.
MatrixXd wiping_path(double phase, const ExpertConfig& cfg);

double target_compression(const SpongeParams& p, const ExpertConfig& cfg);

Demonstration synth_demonstration(const SpongeParams& sponge, const SurfaceProfile& profile,
                                  const ExpertConfig& cfg, Rng& rng);

// For t = 0 .. steps-2: the window ending at t paired with dh[t+1].
std::vector<WindowPair> build_demo_windows(const Demonstration& demo, int window);

struct CorruptDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int dataset_schema_version = 1;

struct Dataset {
    UnlabeledSet unlabeled;
    std::vector<Demonstration> demos;
    std::vector<FTTrajectory> demo_exploratory; // one per demo
    std::vector<SpongeParams> demo_sponges;     // one per demo
    nlohmann::json seeds = nlohmann::json::object();
    nlohmann::json config = nlohmann::json::object();
};

// Layout: manifest.json, unlabeled/NNNN.csv, unlabeled/params.csv,
// demos/NNNN.csv, demos/NNNN_explore.csv. Every file is listed in the
// manifest with its row count and FNV-1a 64 checksum.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

std::uint64_t fnv1a64(const std::string& bytes);
std::string format_double(double v);

} // namespace wipe
