#include "wipe/control/control.hpp"

#include "wipe/data/filter.hpp"

#include <deque>
#include <sstream>

namespace wipe {

double admittance_dh(double f_err, double dh_prev, double dh_prev2, const AdmittanceGains& g)
{
    return (f_err * g.T * g.T + g.B * g.T * dh_prev + g.M * (2.0 * dh_prev - dh_prev2)) / g.denominator();
}

double compute_ac_target(const SpongeParams& sponge, double compression)
{
    SimConfig cfg;
    cfg.noise_sigma_force = 0.0;
    cfg.noise_sigma_torque = 0.0;
    Simulator sim(sponge, SurfaceProfile::flat(0.0), cfg);
    EEState pose;
    pose.position = {0.0, 0.0, sponge.rest_thickness - compression};
    return sim.probe(pose)[2];
}

std::string to_string(ControllerKind k)
{
    switch (k) {
    case ControllerKind::proposed:
        return "proposed";
    case ControllerKind::open_loop:
        return "open_loop";
    case ControllerKind::admittance:
        return "admittance";
    }
    return "?";
}

ControllerKind controller_from_string(const std::string& s)
{
    if (s == "proposed")
        return ControllerKind::proposed;
    if (s == "open_loop")
        return ControllerKind::open_loop;
    if (s == "admittance")
        return ControllerKind::admittance;
    throw std::invalid_argument("unknown controller: " + s);
}

std::string EpisodeLog::to_csv() const
{
    std::ostringstream s;
    s << "t,x,y,z,dh,fx,fy,fz,tx,ty,tz\n";
    for (const auto& st : steps) {
        s << format_double(st.t);
        for (int i = 0; i < 3; ++i)
            s << ',' << format_double(st.commanded[i]);
        s << ',' << format_double(st.dh);
        for (int i = 0; i < 6; ++i)
            s << ',' << format_double(st.ft[i]);
        s << '\n';
    }
    return s.str();
}

Eigen::Vector3d axis_swap_wall(const Eigen::Vector3d& table, double offset)
{
    return {table.z() + offset, table.y(), table.x()};
}

MatrixXd axis_swap_wall(const MatrixXd& xy, const VectorXd& z, double offset)
{
    require(xy.cols() == 2 && xy.rows() == z.size(), "axis_swap_wall: xy must be n x 2 with n heights");
    MatrixXd out(xy.rows(), 3);
    for (Eigen::Index i = 0; i < xy.rows(); ++i)
        out.row(i) = axis_swap_wall(Eigen::Vector3d(xy(i, 0), xy(i, 1), z[i]), offset).transpose();
    return out;
}

SpongeContext prepare_sponge(const TrainedModels& m, const SpongeParams& sponge, std::uint64_t explore_seed)
{
    SpongeContext c;
    const FTTrajectory tau = explore_sponge(sponge, explore_seed);
    c.z_sponge = encode_sponge(m.vae, tau.samples, m.stats.ft_exp);
    c.xy = denormalize(decode_traj(m.traj, c.z_sponge), m.stats.xy);
    return c;
}

EpisodeLog run_episode(ControllerKind kind, const TrainedModels& models, const SpongeParams& sponge,
                       const SurfaceProfile& profile, const EpisodeConfig& cfg, std::uint64_t seed)
{
    if (!cfg.gains.valid())
        throw std::invalid_argument("run_episode: admittance gains give a non-positive denominator");
    EpisodeLog log;
    log.planned_steps = cfg.steps;
    log.sponge = sponge.name;
    log.profile = profile.name;
    log.controller = to_string(kind);
    log.seed = seed;

    Rng seeds(seed);
    const std::uint64_t explore_seed = seeds.next_u64();
    SimConfig sc;
    sc.dt = 1.0 / cfg.rate_hz;
    sc.seed = seeds.next_u64();
    Simulator sim(sponge, profile, sc);
    const bool wall = profile.kind == SurfaceProfile::Kind::wall;

    // The robot probes the sponge first; all controllers replay the decoded xy.
    const SpongeContext ctx = prepare_sponge(models, sponge, explore_seed);
    require(ctx.xy.rows() >= cfg.steps, "run_episode: decoded path shorter than the episode");
    const MatrixXd& xy = ctx.xy;

    auto pose = [&](double x, double y, double z) {
        EEState s;
        const Eigen::Vector3d table(x, y, z);
        if (wall) {
            s.frame = Frame::wall;
            s.position = axis_swap_wall(table, cfg.wall_swap_offset);
        } else {
            s.position = table;
        }
        return s;
    };
    auto inside = [&](const EEState& s) {
        return (s.position.array() >= cfg.safety.workspace_min.array()).all() &&
               (s.position.array() <= cfg.safety.workspace_max.array()).all();
    };

    const double z_anchor =
        surface_height(cfg.demo_surface, xy(0, 0), xy(0, 1)) + sponge.rest_thickness - cfg.anchor_compression;

    std::vector<CausalFilter> filters(6, CausalFilter(cfg.ft_filter.order, cfg.ft_filter.cutoff_hz, cfg.ft_filter.fs_hz));
    std::deque<FTSample> history; // filtered, most recent last
    auto sense = [&](const FTSample& raw, bool first) {
        FTSample f;
        for (int c = 0; c < 6; ++c) {
            if (first)
                filters[static_cast<std::size_t>(c)].reset_steady(raw[c]);
            f[c] = filters[static_cast<std::size_t>(c)](raw[c]);
        }
        history.push_back(f);
    };

    const EEState anchor = pose(xy(0, 0), xy(0, 1), z_anchor);
    sim.reset(anchor);
    try {
        const FTSample f0 = sim.step(anchor);
        if (std::abs(f0[2]) > cfg.safety.max_force) {
            log.aborted = true;
            log.abort_reason = "force limit at anchor";
            return log;
        }
        sense(f0, true);
    } catch (const OverloadFault& e) {
        log.aborted = true;
        log.abort_reason = e.what();
        return log;
    }

    const int window = models.feedback.window;
    double target_fz = compute_ac_target(sponge, cfg.ac_target_compression);
    double x1 = 0.0, x2 = 0.0; // admittance offsets into the surface
    double z = z_anchor;

    for (int t = 0; t < cfg.steps; ++t) {
        const double px = xy(t, 0);
        const double py = xy(t, 1);
        double z_next = z;
        switch (kind) {
        case ControllerKind::proposed: {
            MatrixXd w = MatrixXd::Zero(window, 6);
            const int have = static_cast<int>(history.size());
            for (int r = 0; r < window; ++r) {
                const int src = have - window + r;
                if (src >= 0)
                    w.row(r) = history[static_cast<std::size_t>(src)].transpose();
            }
            z_next = z + predict_dh(models.feedback, ctx.z_sponge, normalize(w, models.stats.ft_demo), models.stats.dh);
            break;
        }
        case ControllerKind::open_loop:
            require(models.open_loop_z.size() >= cfg.steps, "run_episode: open-loop profile too short");
            z_next = models.open_loop_z[t];
            break;
        case ControllerKind::admittance: {
            // Solve x = admittance_dh(f_err(x), x1, x2) with f_err from a
            // static force probe at the candidate pose.
            AdmittanceGains g = cfg.gains;
            g.f_target = target_fz;
            double lo = -0.2, hi = 0.2;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double f_err = sim.probe(pose(px, py, z_anchor - mid))[2] - g.f_target;
                (mid - admittance_dh(f_err, x1, x2, g) < 0.0 ? lo : hi) = mid;
            }
            const double x = 0.5 * (lo + hi);
            x2 = x1;
            x1 = x;
            z_next = z_anchor - x;
            break;
        }
        }

        const EEState cmd = pose(px, py, z_next);
        if (!inside(cmd)) {
            log.aborted = true;
            log.abort_reason = "command outside workspace";
            break;
        }
        FTSample f;
        try {
            f = sim.step(cmd);
        } catch (const OverloadFault& e) {
            log.aborted = true;
            log.abort_reason = e.what();
            break;
        }
        if (std::abs(f[2]) > cfg.safety.max_force) {
            log.aborted = true;
            log.abort_reason = "force limit";
            break;
        }
        EpisodeStep s;
        s.t = t / cfg.rate_hz;
        s.commanded = cmd.position;
        s.ft = f;
        s.dh = z_next - z;
        log.steps.push_back(s);
        sense(f, false);
        z = z_next;
    }
    return log;
}

} // namespace wipe
