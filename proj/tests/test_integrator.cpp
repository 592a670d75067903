#include <doctest.h>

#include <cmath>
#include <cstring>

#include "ringlab/diagnostics.hpp"
#include "ringlab/errors.hpp"
#include "ringlab/integrator.hpp"
#include "support.hpp"

using namespace ringlab;
using ringlab::testing::rel_diff;
using ringlab::testing::thin_blob;

namespace {

KernelConfig kernel_for(const Cloud& c) {
    KernelConfig k;
    k.delta = 1.5 * c.h;
    return k;
}

// Small ring, cheap enough to integrate many steps.
Cloud small_ring(double z0 = 0.0) { return thin_blob(0.05, 0.125, {1.0, z0}); }

double max_position_diff(const Cloud& a, const Cloud& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::hypot(a.particles[i].r - b.particles[i].r, a.particles[i].z - b.particles[i].z));
    return m;
}

Cloud substeps(const Cloud& c, double dt, int n, const IntegratorConfig& ic, const KernelConfig& k) {
    Cloud x = c;
    for (int i = 0; i < n; ++i) x = step(x, dt / n, ic, k);
    return x;
}

// Bitwise equality that treats matching NaNs as equal.
bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double step_ref_dt(const Cloud& c, const KernelConfig& k) {
    return c.h / max_speed(velocity_at_particles(c, k));
}

}  // namespace

TEST_CASE("adaptive_dt") {
    const Cloud c = small_ring();
    IntegratorConfig ic;
    ic.dt_max = 0.5;
    CHECK(adaptive_dt(c, 0.0, c.h, ic) == 0.5);
    const double a = adaptive_dt(c, 100.0, c.h, ic);
    ic.cfl *= 0.5;
    CHECK(adaptive_dt(c, 100.0, c.h, ic) == a * 0.5);
    CHECK(a == doctest::Approx(0.25 * c.h / 100.0).epsilon(1e-15));
    ic.dt_max = 1e-9;
    CHECK(adaptive_dt(c, 100.0, c.h, ic) == 1e-9);
}

TEST_CASE("top decile and core spacing") {
    const Cloud c = small_ring();
    const auto top = top_decile(c);
    CHECK(top.size() >= c.size() / 10);
    CHECK(top.size() <= c.size() / 10 + 1);
    CHECK(core_spacing(c) == doctest::Approx(c.h).epsilon(1e-9));
    Cloud one;
    one.particles.push_back({1.0, 0.0, 1.0, 1.0, Tag::untagged});
    CHECK(std::isinf(core_spacing(one)));
    CHECK(top_decile(one).size() == 1u);
}

TEST_CASE("step size scales like eps^2 on the thin ring") {
    // The peak speed is the core rotation ~ mu / eps rather than the
    // translation speed, and h is tied to eps.
    IntegratorConfig ic;
    ic.dt_max = 1.0;
    std::vector<double> dts;
    for (double eps : {1e-2, 3e-3}) {
        const Cloud c = thin_blob(eps);
        const auto u = velocity_at_particles(c, kernel_for(c));
        dts.push_back(adaptive_dt(c, max_speed(u), c.h, ic));
    }
    const double ratio = dts[0] / dts[1];
    MESSAGE("dt(1e-2) / dt(3e-3) = " << ratio);
    CHECK(ratio == doctest::Approx((1e-2 / 3e-3) * (1e-2 / 3e-3)).epsilon(0.15));
}

TEST_CASE("step keeps weights, tags and order") {
    const Cloud c = small_ring();
    const KernelConfig k = kernel_for(c);
    const IntegratorConfig ic;
    const Cloud s = step(c, 0.01, ic, k);
    REQUIRE(s.size() == c.size());
    CHECK(s.time == 0.01);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(s.particles[i].gamma == c.particles[i].gamma);
        CHECK(s.particles[i].xi0 == c.particles[i].xi0);
        CHECK(s.particles[i].tag == c.particles[i].tag);
    }
    CHECK(moments(s).m0 == moments(c).m0);

    Cloud one;
    one.particles.push_back({1.0, 0.2, 1.0, 1.0, Tag::untagged});
    const Cloud o = step(one, 0.1, ic, KernelConfig{});
    CHECK(o.particles[0].r == 1.0);
    CHECK(o.particles[0].z == 0.2);
}

TEST_CASE("first step converges to the initial velocity") {
    const Cloud c = small_ring();
    const KernelConfig k = kernel_for(c);
    const auto u0 = velocity_at_particles(c, k);
    const double T = step_ref_dt(c, k);
    std::vector<double> err;
    for (double f : {1e-3, 1e-4, 1e-5}) {
        const double dt = f * T;
        const Cloud s = step(c, dt, IntegratorConfig{}, k);
        double e = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double vr = (s.particles[i].r - c.particles[i].r) / dt;
            const double vz = (s.particles[i].z - c.particles[i].z) / dt;
            e = std::max(e, std::hypot(vr - u0[i].u_r, vz - u0[i].u_z));
        }
        err.push_back(e / max_speed(u0));
    }
    // The difference quotient is first order in dt.
    CHECK(err[0] / err[1] == doctest::Approx(10.0).epsilon(0.1));
    CHECK(err[1] / err[2] == doctest::Approx(10.0).epsilon(0.3));
}

TEST_CASE("local error order of rk4 and rk2") {
    const Cloud c = small_ring();
    const KernelConfig k = kernel_for(c);
    const double T = step_ref_dt(c, k);
    for (const auto& [scheme, order] : {std::pair{Scheme::rk4, 5.0}, {Scheme::rk2, 3.0}}) {
        IntegratorConfig ic;
        ic.scheme = scheme;
        IntegratorConfig fine;
        fine.scheme = Scheme::rk4;
        std::vector<double> err;
        for (double dt : {T, T / 2.0}) {
            const Cloud ref = substeps(c, dt, 64, fine, k);
            err.push_back(max_position_diff(step(c, dt, ic, k), ref));
        }
        MESSAGE(to_string(scheme) << " local error ratio " << err[0] / err[1]);
        CHECK(std::log2(err[0] / err[1]) == doctest::Approx(order).epsilon(0.12));
    }
}

TEST_CASE("mirror image is the time-reversed run of the mirrored seed") {
    const Cloud c = small_ring(0.1);
    const KernelConfig k = kernel_for(c);
    IntegratorConfig fwd;
    IntegratorConfig rev = fwd;
    rev.reverse = true;
    Cloud a = c, b = mirror_z(c);
    for (int i = 0; i < 5; ++i) {
        a = step(a, 0.003, fwd, k);
        b = step(b, 0.003, rev, k);
    }
    const Cloud ma = mirror_z(a);
    CHECK(b.particles == ma.particles);
    CHECK(b.time == -a.time);
}

TEST_CASE("run: horizon zero, determinism and resume") {
    const Cloud c = small_ring();
    RunSettings rs;
    rs.kernel = kernel_for(c);
    rs.integrator.t_end = 0.0;
    auto r0 = run(c, rs);
    CHECK(r0.steps == 0);
    REQUIRE(r0.records.size() == 1u);
    CHECK(r0.records[0].t == 0.0);
    CHECK(r0.final_cloud.particles == c.particles);

    rs.integrator.t_end = 0.05;
    rs.integrator.diag_every = 5;
    Cloud mid;
    std::int64_t mid_step = 0;
    RunObserver obs;
    obs.on_checkpoint = [&](const Cloud& x, std::int64_t s, bool final) {
        if (!final && s == 10) {
            mid = x;
            mid_step = s;
        }
    };
    rs.integrator.checkpoint_every = 10;
    const auto full = run(c, rs, obs);
    REQUIRE(mid_step == 10);
    REQUIRE(full.steps > 10);
    CHECK(full.final_cloud.time == 0.05);
    CHECK(full.records.back().step == full.steps);

    const auto again = run(c, rs);
    CHECK(again.final_cloud.particles == full.final_cloud.particles);

    RunSettings resume = rs;
    resume.start_step = mid_step;
    const auto tail = run(mid, resume);
    CHECK(tail.final_cloud.particles == full.final_cloud.particles);
    CHECK(tail.steps == full.steps);
    std::size_t k = 0;
    while (full.records[k].step <= mid_step) ++k;
    REQUIRE(tail.records.size() == full.records.size() - k);
    for (std::size_t i = 0; i < tail.records.size(); ++i)
        CHECK(same_bits(record_values(tail.records[i]), record_values(full.records[k + i])));

    // M0 is bitwise constant along the series.
    for (const auto& r : full.records) CHECK(r.m0 == full.records.front().m0);
}

TEST_CASE("run: scaling consistency") {
    const Cloud c = small_ring();
    RunSettings rs;
    rs.kernel = kernel_for(c);
    rs.integrator.t_end = 0.02;
    rs.integrator.dt_max = 1.0;
    const auto base = run(c, rs);
    for (const auto& [l, g, tol] : {std::tuple{2.0, 4.0, 0.0}, {1.5, 0.75, 1e-6}}) {
        const Cloud s = scale(c, l, g);
        RunSettings sr = rs;
        sr.kernel.delta = rs.kernel.delta / l;
        sr.integrator.t_end = rs.integrator.t_end / g;
        const auto r = run(s, sr);
        CHECK(r.steps == base.steps);
        const Cloud back = scale(base.final_cloud, l, g);
        double worst = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i)
            worst = std::max({worst, rel_diff(back.particles[i].r, r.final_cloud.particles[i].r),
                              std::abs(back.particles[i].z - r.final_cloud.particles[i].z) / back.particles[i].r});
        CHECK(worst <= tol);
    }
}

TEST_CASE("run: failures surface as RunError after a final checkpoint") {
    Cloud c = small_ring();
    c.h = 50.0;  // absurd resolution length: the first step overshoots the axis
    RunSettings rs;
    rs.kernel = kernel_for(small_ring());
    rs.integrator.dt_max = 100.0;
    rs.integrator.t_end = 100.0;
    bool final_seen = false;
    RunObserver obs;
    obs.on_checkpoint = [&](const Cloud&, std::int64_t, bool final) { final_seen = final_seen || final; };
    try {
        run(c, rs, obs);
        FAIL("expected RunError");
    } catch (const RunError& e) {
        CHECK(e.time() == 0.0);
    }
    CHECK(final_seen);
}

TEST_CASE("integrator config validation") {
    IntegratorConfig ic;
    CHECK_NOTHROW(ic.validate());
    ic.cfl = 0.0;
    CHECK_THROWS_AS(ic.validate(), ConfigError);
    ic = {};
    ic.cfl = 1.5;
    CHECK_THROWS_AS(ic.validate(), ConfigError);
    ic = {};
    ic.dt_max = 0.0;
    CHECK_THROWS_AS(ic.validate(), ConfigError);
    ic = {};
    ic.t_end = -1.0;
    CHECK_THROWS_AS(ic.validate(), ConfigError);
    ic = {};
    ic.diag_every = 0;
    CHECK_THROWS_AS(ic.validate(), ConfigError);
    CHECK(scheme_from_string(to_string(Scheme::rk2)) == Scheme::rk2);
}
