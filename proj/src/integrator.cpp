#include "ringlab/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ringlab/errors.hpp"

namespace ringlab {

std::string_view to_string(Scheme s) { return s == Scheme::rk2 ? "rk2" : "rk4"; }

Scheme scheme_from_string(std::string_view s) {
    if (s == "rk4") return Scheme::rk4;
    if (s == "rk2") return Scheme::rk2;
    throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

void IntegratorConfig::validate() const {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("integrator.cfl must lie in (0, 1]");
    if (!(dt_max > 0.0)) throw ConfigError("integrator.dt_max must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("integrator.t_end must be finite and >= 0");
    if (diag_every < 1) throw ConfigError("integrator.diag_every must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("integrator.checkpoint_every must be >= 0");
}

double adaptive_dt(const Cloud&, double u_max, double h_core, const IntegratorConfig& cfg) {
    if (!(u_max > 0.0)) return cfg.dt_max;
    return std::min(cfg.dt_max, cfg.cfl * h_core / u_max);
}

std::vector<std::size_t> top_decile(const Cloud& c) {
    std::vector<std::size_t> idx(c.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return c.particles[a].gamma > c.particles[b].gamma; });
    idx.resize(std::min(c.size(), std::max<std::size_t>(1, (c.size() + 9) / 10)));
    return idx;
}

double core_spacing(const Cloud& c, std::span<const std::size_t> subset) {
    double best2 = std::numeric_limits<double>::infinity();
    for (std::size_t j : subset) {
        const Particle& a = c.particles[j];
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (k == j) continue;
            const double dr = a.r - c.particles[k].r;
            const double dz = a.z - c.particles[k].z;
            best2 = std::min(best2, dr * dr + dz * dz);
        }
    }
    return std::sqrt(best2);
}

double core_spacing(const Cloud& c) {
    const auto idx = top_decile(c);
    return core_spacing(c, idx);
}

double max_speed(std::span<const VelocitySample> u) {
    double m = 0.0;
    for (const auto& v : u) m = std::max(m, std::hypot(v.u_r, v.u_z));
    return m;
}

namespace {

std::vector<VelocitySample> stage_velocity(const Cloud& c, const KernelConfig& kcfg, const VelocityPath& path,
                                           bool reverse) {
    auto u = particle_velocities(c, kcfg, path);
    if (reverse) {
        for (auto& v : u) {
            v.u_r = -v.u_r;
            v.u_z = -v.u_z;
        }
    }
    return u;
}

// stage = base + h * k, with the axis guard.
void advance(const Cloud& base, const std::vector<VelocitySample>& k, double h, double r_min, Cloud& out) {
    for (std::size_t i = 0; i < base.size(); ++i) {
        Particle& p = out.particles[i];
        p.r = base.particles[i].r + h * k[i].u_r;
        p.z = base.particles[i].z + h * k[i].u_z;
        if (!(p.r > r_min)) throw AxisCrossingError("particle " + std::to_string(i) + " reached the axis guard");
    }
}

}  // namespace

Cloud step(const Cloud& c, double dt, const IntegratorConfig& cfg, const KernelConfig& kcfg, const VelocityPath& path,
           const std::vector<VelocitySample>* k1_in) {
    if (!(dt > 0.0)) throw DomainError("step: dt must be positive");
    const double r_min = axis_guard(c);
    const bool rev = cfg.reverse;
    std::vector<VelocitySample> k1_local;
    if (!k1_in) k1_local = stage_velocity(c, kcfg, path, rev);
    const std::vector<VelocitySample>& k1 = k1_in ? *k1_in : k1_local;

    Cloud stage = c;
    Cloud out = c;
    const std::size_t n = c.size();
    if (cfg.scheme == Scheme::rk2) {
        advance(c, k1, 0.5 * dt, r_min, stage);
        const auto k2 = stage_velocity(stage, kcfg, path, rev);
        advance(c, k2, dt, r_min, out);
    } else {
        const double half = 0.5 * dt;
        advance(c, k1, half, r_min, stage);
        const auto k2 = stage_velocity(stage, kcfg, path, rev);
        advance(c, k2, half, r_min, stage);
        const auto k3 = stage_velocity(stage, kcfg, path, rev);
        advance(c, k3, dt, r_min, stage);
        const auto k4 = stage_velocity(stage, kcfg, path, rev);
        const double w = dt / 6.0;
        for (std::size_t i = 0; i < n; ++i) {
            Particle& p = out.particles[i];
            const double sr = k1[i].u_r + 2.0 * k2[i].u_r + 2.0 * k3[i].u_r + k4[i].u_r;
            const double sz = k1[i].u_z + 2.0 * k2[i].u_z + 2.0 * k3[i].u_z + k4[i].u_z;
            p.r = c.particles[i].r + w * sr;
            p.z = c.particles[i].z + w * sz;
            if (!(p.r > r_min)) throw AxisCrossingError("particle " + std::to_string(i) + " reached the axis guard");
        }
    }
    out.time = rev ? c.time - dt : c.time + dt;
    return out;
}

RunResult run(const Cloud& seed, const RunSettings& rs, const RunObserver& obs) {
    rs.integrator.validate();
    rs.kernel.validate();
    const IntegratorConfig& ic = rs.integrator;
    const double dir = ic.reverse ? -1.0 : 1.0;

    RunResult res;
    res.final_cloud = seed;
    Cloud& c = res.final_cloud;
    std::int64_t step_index = rs.start_step;
    bool last_recorded = rs.start_step != 0;

    auto record = [&] {
        DiagnosticsRecord rec = compute_record(c, rs.kernel, rs.diagnostics, step_index);
        if (obs.on_record) obs.on_record(rec);
        res.records.push_back(rec);
        last_recorded = true;
    };

    try {
        if (rs.start_step == 0) record();
        // Resolution length of the core. The nearest-neighbour spacing of the
        // heavy particles collapses within a few core rotations as the seeding
        // lattice shears, although the velocity field stays smooth on the blob
        // scale; the seeding spacing is used when known.
        const double h_core = c.h > 0.0 ? c.h : core_spacing(c);
        while (true) {
            const double remaining = ic.t_end - dir * c.time;
            if (!(remaining > 0.0)) break;
            const auto k1 = stage_velocity(c, rs.kernel, rs.path, ic.reverse);
            double dt = adaptive_dt(c, max_speed(k1), h_core, ic);
            if (!(dt > 0.0)) throw RunError("step size collapsed to zero", c.time);
            const bool last = dt >= remaining;
            if (last) dt = remaining;
            c = step(c, dt, ic, rs.kernel, rs.path, &k1);
            if (last) c.time = dir * ic.t_end;
            ++step_index;
            last_recorded = false;
            if (step_index % ic.diag_every == 0) record();
            if (ic.checkpoint_every > 0 && step_index % ic.checkpoint_every == 0 && obs.on_checkpoint)
                obs.on_checkpoint(c, step_index, false);
        }
        if (!last_recorded) record();
    } catch (const RunError&) {
        if (obs.on_checkpoint) obs.on_checkpoint(c, step_index, true);
        throw;
    } catch (const Error& e) {
        if (obs.on_checkpoint) obs.on_checkpoint(c, step_index, true);
        throw RunError(e.what(), c.time);
    }
    res.steps = step_index;
    if (obs.on_checkpoint) obs.on_checkpoint(c, step_index, true);
    return res;
}

}  // namespace ringlab
