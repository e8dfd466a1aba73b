#pragma once

#include "wipe/data/dataset.hpp"
#include "wipe/models/models.hpp"
#include "wipe/sim/sponge_sim.hpp"

#include <string>
#include <vector>

namespace wipe {

struct AdmittanceGains {
    double M = 0.5;  // kg
    double B = 5.0;  // N/(m/s)
    double K = 15.0; // N/m
    double T = 0.4;  // s
    double f_target = 0.0;

    double denominator() const { return M + B * T + K * T * T; }
    bool valid() const { return denominator() > 0.0; }
};

// Discrete admittance filter:
// dh = (f_err T^2 + B T dh_prev + M (2 dh_prev - dh_prev2)) / (M + B T + K T^2).
// f_err = sensed fz - target fz.
double admittance_dh(double f_err, double dh_prev, double dh_prev2, const AdmittanceGains& g);

// Noise-free sensed fz with the sponge statically compressed by `compression`.
double compute_ac_target(const SpongeParams& sponge, double compression = 0.01);

enum class ControllerKind { proposed, open_loop, admittance };

std::string to_string(ControllerKind k);
ControllerKind controller_from_string(const std::string& s);

struct SafetyLimits {
    double max_force = 60.0;
    Eigen::Vector3d workspace_min{-1.0, -1.0, -1.0};
    Eigen::Vector3d workspace_max{1.0, 1.0, 1.0};
};

struct EpisodeStep {
    double t = 0.0;
    Eigen::Vector3d commanded = Eigen::Vector3d::Zero(); // world frame
    FTSample ft = FTSample::Zero();                      // sensor frame, raw
    double dh = 0.0;                                     // table-frame height change applied
};

struct EpisodeLog {
    std::vector<EpisodeStep> steps;
    int planned_steps = 25;
    std::string sponge;
    std::string profile;
    std::string controller;
    std::uint64_t seed = 0;
    bool aborted = false;
    std::string abort_reason;

    std::string to_csv() const;
};

// Everything the learned controllers need at deployment.
struct TrainedModels {
    SpongeVAE vae;
    TrajDecoder traj;
    FTFeedback feedback;
    ModelStats stats;
    VectorXd open_loop_z; // mean demonstrated z per step
};

struct EpisodeConfig {
    int steps = 25;
    double rate_hz = 2.5;
    // Anchor: sponge compressed this much on the demonstration surface at the
    // first path point.
    double anchor_compression = 0.004;
    SurfaceProfile demo_surface = SurfaceProfile::sloped(0.0, {0.1, 0.0}, "demo");
    AdmittanceGains gains;
    double ac_target_compression = 0.01;
    SafetyLimits safety;
    FilterConfig ft_filter{2, 0.8, 2.5};
    double wall_swap_offset = 0.51;
};

// Table commands (x, y, z) -> wall commands (z + offset, y, x).
MatrixXd axis_swap_wall(const MatrixXd& xy, const VectorXd& z, double offset);
Eigen::Vector3d axis_swap_wall(const Eigen::Vector3d& table, double offset);

// Decoded xy path for a sponge: exploratory run, Z_sponge, trajectory decoder.
struct SpongeContext {
    VectorXd z_sponge;
    MatrixXd xy;
};
SpongeContext prepare_sponge(const TrainedModels& m, const SpongeParams& sponge, std::uint64_t explore_seed);

// 25 steps at 2.5 Hz. Before the first logged step the tool senses once at
// the anchor pose (not logged). Wall profiles run through the axis swap.
EpisodeLog run_episode(ControllerKind kind, const TrainedModels& models, const SpongeParams& sponge,
                       const SurfaceProfile& profile, const EpisodeConfig& cfg, std::uint64_t seed);

} // namespace wipe
