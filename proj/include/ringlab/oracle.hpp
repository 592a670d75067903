#pragma once

// Brute-force references for the tests. Nothing here shares code with the
// production kernels: the integrals are computed by adaptive Gauss-Kronrod
// quadrature in long double, and the reference velocity uses the standard
// library's complete elliptic integrals.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ringlab/cloud.hpp"
#include "ringlab/kernels.hpp"
#include "ringlab/velocity.hpp"

namespace ringlab::oracle {

struct QuadResult {
    double value = 0.0;
    double abs_err_estimate = 0.0;
    std::size_t subdivisions = 0;
};

struct QuadOptions {
    double rel_tol = 1e-12;          ///< target: abs_err <= rel_tol * |value|
    std::size_t max_subdivisions = 4000;
};

/// Adaptive G7/K15 on [a, b] in long double. Throws NonConvergenceError when
/// the budget is exhausted before abs_err <= rel_tol * max(|value|, tiny).
using Integrand = std::function<long double(long double)>;
QuadResult integrate(const Integrand& f, long double a, long double b, const QuadOptions& opt = {});

/// Single 15-point Kronrod rule on [a, b]; also returns the embedded 7-point
/// Gauss value. Exposed for the exactness tests.
struct RulePair {
    long double kronrod;
    long double gauss;
};
RulePair gauss_kronrod_15(const Integrand& f, long double a, long double b);

/// Argument of F is the squared similarity variable, as in eval_F.
QuadResult quad_F(double s, const QuadOptions& opt = {});
QuadResult quad_F1(double s, const QuadOptions& opt = {});
QuadResult quad_F2(double s, const QuadOptions& opt = {});

/// Leading small-argument expansions; domain 0 < s <= 1.
double asymptotic_F(double s);
double asymptotic_F1(double s);
double asymptotic_F2(double s);

/// Direct sum with the kernel built from std::comp_ellint_1/2 in long double
/// and compensated long double accumulation. Same self/coincidence rules as
/// velocity_direct.
std::vector<VelocitySample> direct_velocity_reference(const Cloud& c, std::span<const KernelPoint> targets,
                                                      const KernelConfig& kcfg);

}  // namespace ringlab::oracle
