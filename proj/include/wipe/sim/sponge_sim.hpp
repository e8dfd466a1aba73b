#pragma once

#include "wipe/nn/rng.hpp"
#include "wipe/nn/tensor.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wipe {

struct SpongeParams {
    double mu = 1.0;               // sliding friction
    double k = 300.0;              // stiffness, N/m
    double d = 0.1;                // compliance width, m
    double rest_thickness = 0.03;  // m
    std::string name = "normal";

    bool valid() const
    {
        return mu >= 0.0 && mu <= 3.5 && k >= 0.5 && k <= 1000.0 && d >= 0.02 && d <= 0.3 && rest_thickness > 0.0;
    }
};

struct SurfaceProfile {
    enum class Kind { flat, sloped, wall };
    Kind kind = Kind::flat;
    double base_height = 0.0;
    Eigen::Vector2d gradient = Eigen::Vector2d::Zero(); // dz/dx, dz/dy
    double wall_offset = 0.0;                           // wall plane at world x = wall_offset
    std::string name = "flat";

    static SurfaceProfile flat(double h, std::string name = "flat");
    static SurfaceProfile sloped(double h, Eigen::Vector2d g, std::string name = "sloped");
    static SurfaceProfile wall(double offset, std::string name = "wall");
};

// Table: height at (x, y). Wall: the wall plane position along world x
// (x, y are ignored); contact along the wall normal is handled by the
// simulator's frame mapping.
double surface_height(const SurfaceProfile& profile, double x, double y);

enum class Frame { table, wall };

struct EEState {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Frame frame = Frame::table;
};

// fx, fy, fz (N), tx, ty, tz (N m), expressed in the sensor frame.
using FTSample = Eigen::Matrix<double, 6, 1>;

struct SimConfig {
    double dt = 0.01;
    double noise_sigma_force = 0.05;
    double noise_sigma_torque = 0.002;
    double friction_reg_eps = 0.005;
    double max_force = 100.0;
    std::uint64_t seed = 0;
    Eigen::Vector3d workspace_min{-1.0, -1.0, -1.0};
    Eigen::Vector3d workspace_max{1.0, 1.0, 1.0};
};

struct ContractViolation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OverloadFault : std::runtime_error {
    explicit OverloadFault(double fz)
        : std::runtime_error("FT overload: |fz| = " + std::to_string(fz) + " N")
        , fz(fz)
    {
    }
    double fz;
};

// k delta (1 + (delta/d)^2), the static spring part of the normal force (N, >= 0).
double spring_force(const SpongeParams& p, double delta);

// Compression that produces a static spring force of `force` N (bisection).
double compression_for_force(const SpongeParams& p, double force);

// Contact wrench in the sponge frame. Noise is added only when rng is given.
FTSample contact_force(const SpongeParams& p, double penetration, double penetration_rate,
                       const Eigen::Vector2d& v_lateral, const SimConfig& cfg, Rng* noise = nullptr);

// Quasi-static, position-controlled end effector holding one sponge.
class Simulator {
public:
    Simulator(SpongeParams params, SurfaceProfile profile, SimConfig cfg);

    // Sets the previous pose used for finite-difference rates.
    void reset(const EEState& pose);

    // Teleports to the commanded pose and returns the sensed FT sample.
    // Throws OverloadFault when |fz| exceeds cfg.max_force.
    FTSample step(const EEState& commanded);

    // Compression at a pose without advancing the simulation.
    double penetration(const EEState& pose) const;

    // Noise-free static force at a pose (used by model-based probes).
    FTSample probe(const EEState& pose) const;

    const SpongeParams& params() const { return params_; }
    const SurfaceProfile& profile() const { return profile_; }
    const SimConfig& config() const { return cfg_; }

private:
    // Normal gap and in-plane coordinates in the surface/sensor frame.
    void surface_coords(const EEState& pose, double& gap, Eigen::Vector2d& lateral) const;

    SpongeParams params_;
    SurfaceProfile profile_;
    SimConfig cfg_;
    Rng rng_;
    std::optional<std::pair<double, Eigen::Vector2d>> prev_;
};

inline constexpr int exploratory_steps = 400;

// Press 0.01 m/s for 2 s, then 0.05 m/s left for 1 s and right for 1 s,
// sampled at 100 Hz. Starts with the sponge just touching the surface.
// Returns 400 x 6 (fx fy fz tx ty tz).
MatrixXd run_exploratory(const SpongeParams& params, const SurfaceProfile& profile, const SimConfig& cfg);

// mu ~ U[0, 3.5], k ~ log-uniform[0.5, 1000], d ~ U[0.02, 0.3].
SpongeParams sample_randomized_params(Rng& rng);

// "normal" followed by s1f1..s3f3 (stiffness level i, friction level j).
std::vector<SpongeParams> make_sponge_grid();

} // namespace wipe
