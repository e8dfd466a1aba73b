#include "wipe/sim/sponge_sim.hpp"

#include <algorithm>
#include <cmath>

namespace wipe {

SurfaceProfile SurfaceProfile::flat(double h, std::string name)
{
    SurfaceProfile s;
    s.kind = Kind::flat;
    s.base_height = h;
    s.name = std::move(name);
    return s;
}

SurfaceProfile SurfaceProfile::sloped(double h, Eigen::Vector2d g, std::string name)
{
    SurfaceProfile s;
    s.kind = Kind::sloped;
    s.base_height = h;
    s.gradient = g;
    s.name = std::move(name);
    return s;
}

SurfaceProfile SurfaceProfile::wall(double offset, std::string name)
{
    SurfaceProfile s;
    s.kind = Kind::wall;
    s.wall_offset = offset;
    s.name = std::move(name);
    return s;
}

double surface_height(const SurfaceProfile& profile, double x, double y)
{
    switch (profile.kind) {
    case SurfaceProfile::Kind::flat:
        return profile.base_height;
    case SurfaceProfile::Kind::sloped:
        return profile.base_height + profile.gradient.x() * x + profile.gradient.y() * y;
    case SurfaceProfile::Kind::wall:
        return profile.wall_offset;
    }
    return profile.base_height;
}

double spring_force(const SpongeParams& p, double delta)
{
    const double r = delta / p.d;
    return p.k * delta * (1.0 + r * r);
}

double compression_for_force(const SpongeParams& p, double force)
{
    if (force <= 0.0)
        return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (spring_force(p, mid) < force ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

FTSample contact_force(const SpongeParams& p, double penetration, double penetration_rate,
                       const Eigen::Vector2d& v_lateral, const SimConfig& cfg, Rng* noise)
{
    if (penetration < 0.0)
        throw ContractViolation("contact_force: negative penetration");
    FTSample f = FTSample::Zero();
    if (penetration > 0.0) {
        const double press = std::max(0.0, spring_force(p, penetration) + p.k * p.d * penetration_rate);
        const double fz = -press;
        const double scale = p.mu * press / (v_lateral.norm() + cfg.friction_reg_eps);
        const double fx = -scale * v_lateral.x();
        const double fy = -scale * v_lateral.y();
        const double hc = p.rest_thickness - penetration;
        f << fx, fy, fz, fy * hc, -fx * hc, 0.0;
    }
    if (noise) {
        for (int i = 0; i < 3; ++i)
            f[i] += cfg.noise_sigma_force * noise->normal();
        for (int i = 3; i < 6; ++i)
            f[i] += cfg.noise_sigma_torque * noise->normal();
    }
    return f;
}

Simulator::Simulator(SpongeParams params, SurfaceProfile profile, SimConfig cfg)
    : params_(std::move(params))
    , profile_(std::move(profile))
    , cfg_(cfg)
    , rng_(cfg.seed)
{
    if (!(cfg_.dt > 0.0) || cfg_.noise_sigma_force < 0.0 || cfg_.noise_sigma_torque < 0.0)
        throw std::invalid_argument("SimConfig: dt must be positive and sigmas non-negative");
    if (!(params_.rest_thickness > 0.0))
        throw std::invalid_argument("SpongeParams: rest thickness must be positive");
}

void Simulator::surface_coords(const EEState& pose, double& gap, Eigen::Vector2d& lateral) const
{
    const Eigen::Vector3d& p = pose.position;
    if (profile_.kind == SurfaceProfile::Kind::wall) {
        // Sensor frame rotated 90 degrees: sensor (x, y, z) <-> world (z, y, x).
        gap = p.x() - profile_.wall_offset;
        lateral = {p.z(), p.y()};
    } else {
        gap = p.z() - surface_height(profile_, p.x(), p.y());
        lateral = {p.x(), p.y()};
    }
}

double Simulator::penetration(const EEState& pose) const
{
    double gap;
    Eigen::Vector2d lateral;
    surface_coords(pose, gap, lateral);
    return std::max(0.0, params_.rest_thickness - gap);
}

void Simulator::reset(const EEState& pose)
{
    double gap;
    Eigen::Vector2d lateral;
    surface_coords(pose, gap, lateral);
    prev_ = std::make_pair(std::max(0.0, params_.rest_thickness - gap), lateral);
}

FTSample Simulator::step(const EEState& commanded)
{
    const Eigen::Vector3d& p = commanded.position;
    if ((p.array() < cfg_.workspace_min.array()).any() || (p.array() > cfg_.workspace_max.array()).any())
        throw ContractViolation("Simulator::step: command outside the workspace box");
    double gap;
    Eigen::Vector2d lateral;
    surface_coords(commanded, gap, lateral);
    const double delta = std::max(0.0, params_.rest_thickness - gap);
    double rate = 0.0;
    Eigen::Vector2d v = Eigen::Vector2d::Zero();
    if (prev_) {
        rate = (delta - prev_->first) / cfg_.dt;
        v = (lateral - prev_->second) / cfg_.dt;
    }
    prev_ = std::make_pair(delta, lateral);
    FTSample f = contact_force(params_, delta, rate, v, cfg_, &rng_);
    if (std::abs(f[2]) > cfg_.max_force)
        throw OverloadFault(f[2]);
    return f;
}

FTSample Simulator::probe(const EEState& pose) const
{
    return contact_force(params_, penetration(pose), 0.0, Eigen::Vector2d::Zero(), cfg_, nullptr);
}

MatrixXd run_exploratory(const SpongeParams& params, const SurfaceProfile& profile, const SimConfig& cfg)
{
    Simulator sim(params, profile, cfg);
    const double dt = cfg.dt;
    const double h0 = surface_height(profile, 0.0, 0.0);
    auto pose_at = [&](double press, double x) {
        EEState s;
        if (profile.kind == SurfaceProfile::Kind::wall) {
            s.frame = Frame::wall;
            s.position = {profile.wall_offset + params.rest_thickness - press, 0.0, x};
        } else {
            s.position = {x, 0.0, h0 + params.rest_thickness - press};
        }
        return s;
    };
    sim.reset(pose_at(0.0, 0.0));
    MatrixXd out(exploratory_steps, 6);
    for (int i = 0; i < exploratory_steps; ++i) {
        const double t = (i + 1) * dt;
        const double press = i < 200 ? 0.01 * t : 0.02;
        double x = 0.0;
        if (i >= 300)
            x = -0.05 + 0.05 * (t - 3.0);
        else if (i >= 200)
            x = -0.05 * (t - 2.0);
        out.row(i) = sim.step(pose_at(press, x)).transpose();
    }
    return out;
}

SpongeParams sample_randomized_params(Rng& rng)
{
    SpongeParams p;
    p.mu = rng.uniform(0.0, 3.5);
    p.k = std::exp(rng.uniform(std::log(0.5), std::log(1000.0)));
    p.d = rng.uniform(0.02, 0.3);
    p.rest_thickness = 0.03;
    p.name = "random";
    return p;
}

std::vector<SpongeParams> make_sponge_grid()
{
    std::vector<SpongeParams> grid;
    grid.push_back({1.0, 300.0, 0.1, 0.03, "normal"});
    const double ks[] = {150.0, 400.0, 800.0};
    const double mus[] = {0.5, 1.2, 2.5};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            grid.push_back({mus[j], ks[i], 0.1, 0.03, "s" + std::to_string(i + 1) + "f" + std::to_string(j + 1)});
    return grid;
}

} // namespace wipe
