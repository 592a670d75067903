#pragma once

// Scalar kernels of the axisymmetric (no-swirl) Biot-Savart law on the
// half-plane H = {(r, z) : r > 0}:
//
//   F(s)  = int_0^pi cos a / (s + 2 - 2 cos a)^{1/2} da          (energy)
//   F1(s) = int_0^pi cos a / (s^2 + 2 - 2 cos a)^{3/2} da        (velocity)
//   F2(s) = int_0^pi (1 - cos a) / (s^2 + 2 - 2 cos a)^{3/2} da  (velocity)
//
// Note that F takes the *squared* similarity variable as its argument.
//
// Each function has three evaluation branches:
//   - asymptotic: argument <= s_lo, logarithmic expansion of K and E about k' = 0
//   - elliptic:   s_lo < argument < s_hi, closed form in complete elliptic
//                 integrals K(k), E(k) evaluated by the AGM (or the same log
//                 series while k' is small)
//   - far:        argument >= s_hi, convergent binomial series in 2/(s^2 + 2)

#include <cmath>
#include <numbers>
#include <string_view>

namespace ringlab {

struct KernelPoint {
    double r = 1.0;
    double z = 0.0;

    friend bool operator==(const KernelPoint&, const KernelPoint&) = default;
};

struct KernelConfig {
    double s_lo = 1e-3;
    double s_hi = 1e2;
    double quad_tol = 1e-10;
    double delta = 0.0;  ///< blob regularization length

    /// Throws DomainError unless 0 < s_lo < s_hi, quad_tol in (0, 1e-6], delta >= 0.
    void validate() const;
};

struct KernelValue {
    double k_r = 0.0;
    double k_z = 0.0;
};

enum class Branch { asymptotic, elliptic, far };

std::string_view to_string(Branch b);
Branch branch_for(double s, const KernelConfig& cfg);

double eval_F(double s, const KernelConfig& cfg = {});
double eval_F1(double s, const KernelConfig& cfg = {});
double eval_F2(double s, const KernelConfig& cfg = {});

struct F1F2 {
    double f1;
    double f2;
};

/// F1 and F2 at the same argument; shares the elliptic-integral evaluation.
/// No argument checking: s must be > 0 and finite.
F1F2 eval_F1F2_unchecked(double s, const KernelConfig& cfg);

/// F without argument checking (s > 0).
double eval_F_unchecked(double s, const KernelConfig& cfg);

/// K(x, x') including blob regularization |x - x'|^2 -> |x - x'|^2 + delta^2
/// inside the similarity variable.
KernelValue biot_savart_kernel(KernelPoint x, KernelPoint xp, const KernelConfig& cfg = {});

namespace detail {

inline constexpr double inv_two_pi = 0.5 * std::numbers::inv_pi;

/// Contribution of one source with unit weight at (rp, zp) to the velocity at
/// (r, z), given q = sqrt(r rp) and the precomputed F1(s), F2(s). Shared by
/// every direct path so that symmetric and one-sided pair loops produce
/// identical bits.
inline KernelValue kernel_from_q(double r, double z, double rp, double zp, double q, F1F2 f) {
    const double inv = 1.0 / (r * q);
    const double dr = r - rp;
    const double dz = z - zp;
    KernelValue k;
    // q / r^2 = rp / (r q)
    k.k_r = inv_two_pi * (f.f1 * dz * inv);
    k.k_z = inv_two_pi * ((f.f2 * rp - f.f1 * dr) * inv);
    return k;
}

inline KernelValue kernel_from(double r, double z, double rp, double zp, F1F2 f) {
    return kernel_from_q(r, z, rp, zp, std::sqrt(r * rp), f);
}

/// Squared regularized similarity variable; symmetric in its arguments bitwise.
inline double similarity_sq(double r, double z, double rp, double zp, double delta_sq) {
    const double dr = r - rp;
    const double dz = z - zp;
    return (dr * dr + dz * dz + delta_sq) / (r * rp);
}

}  // namespace detail

}  // namespace ringlab
