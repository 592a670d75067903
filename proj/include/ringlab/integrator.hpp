#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ringlab/cloud.hpp"
#include "ringlab/diagnostics.hpp"
#include "ringlab/kernels.hpp"
#include "ringlab/velocity.hpp"

namespace ringlab {

enum class Scheme { rk4, rk2 };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

struct IntegratorConfig {
    Scheme scheme = Scheme::rk4;
    double cfl = 0.25;
    double dt_max = 1e-2;
    double t_end = 1.0;  ///< horizon: the run stops at |clock| = t_end
    std::int64_t diag_every = 100;
    std::int64_t checkpoint_every = 0;  ///< 0 disables periodic checkpoints
    /// Integrate dx/dt = -u (clock decreasing). Mirror images of forward runs
    /// are reverse runs of the mirrored seed.
    bool reverse = false;

    /// Throws ConfigError unless cfl in (0, 1], dt_max > 0, t_end >= 0,
    /// diag_every >= 1, checkpoint_every >= 0.
    void validate() const;
};

/// min(dt_max, cfl h_core / u_max); dt_max when u_max = 0.
double adaptive_dt(const Cloud& c, double u_max, double h_core, const IntegratorConfig& cfg);

/// Indices of the top decile of particles by gamma (at least one), ties in
/// index order.
std::vector<std::size_t> top_decile(const Cloud& c);

/// Minimum nearest-neighbour distance from the given particles to any other
/// particle; +inf for a single particle.
double core_spacing(const Cloud& c, std::span<const std::size_t> subset);
double core_spacing(const Cloud& c);

double max_speed(std::span<const VelocitySample> u);

/// One RK step of size dt > 0 (direction from cfg.reverse). `k1` may carry the
/// first-stage velocity already evaluated at c (it is reused, not recomputed).
/// Throws AxisCrossingError when a stage position reaches r <= r_min.
Cloud step(const Cloud& c, double dt, const IntegratorConfig& cfg, const KernelConfig& kcfg,
           const VelocityPath& path = {}, const std::vector<VelocitySample>* k1 = nullptr);

struct RunSettings {
    IntegratorConfig integrator{};
    KernelConfig kernel{};
    VelocityPath path{};
    DiagnosticsSettings diagnostics{};
    std::int64_t start_step = 0;  ///< nonzero when resuming from a checkpoint
};

struct RunObserver {
    std::function<void(const DiagnosticsRecord&)> on_record;
    /// Called with (cloud, step, final). `final` is set for the last state of
    /// the run, including the last good state before an abort.
    std::function<void(const Cloud&, std::int64_t, bool)> on_checkpoint;
};

struct RunResult {
    Cloud final_cloud;
    std::int64_t steps = 0;  ///< index of the last completed step
    std::vector<DiagnosticsRecord> records;
};

/// Advance to the horizon with dt = adaptive_dt(c, max |u|, h_core), where
/// h_core is the seeding spacing c.h (or core_spacing of the seed when c.h = 0).
/// Records diagnostics at step 0 (unless resuming),
/// every diag_every steps and at the final step. Errors are rethrown as
/// RunError carrying the failing time, after on_checkpoint(final = true).
RunResult run(const Cloud& seed, const RunSettings& rs, const RunObserver& obs = {});

}  // namespace ringlab
