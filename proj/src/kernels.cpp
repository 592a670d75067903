#include "ringlab/kernels.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "ringlab/errors.hpp"

namespace ringlab {

namespace {

constexpr double pi = std::numbers::pi;
constexpr int kLogTerms = 24;

// Coefficients of the expansions about k' = 0 (m1 = k'^2, L = log(4/k')):
//   K = sum_n a_n m1^n (L - b_n)
//   E = 1 + sum_{n>=1} c_n m1^n (L - d_n)
struct LogSeries {
    std::array<double, kLogTerms> a{}, b{}, c{}, d{};
};

constexpr LogSeries make_log_series() {
    LogSeries t;
    double poch = 1.0;       // (1/2)_n / n!
    double poch_prev = 1.0;  // (1/2)_{n-1} / (n-1)!
    double harmonic = 0.0;
    t.a[0] = 1.0;
    t.b[0] = 0.0;
    for (int n = 1; n < kLogTerms; ++n) {
        poch_prev = poch;
        poch *= (n - 0.5) / n;
        harmonic += 2.0 / ((2.0 * n - 1.0) * (2.0 * n));
        t.a[n] = poch * poch;
        t.b[n] = harmonic;
        // (1/2)_n (1/2)_{n-1} / (n! (n-1)!)
        t.c[n] = poch * poch_prev;
        t.d[n] = harmonic - 1.0 / (2.0 * n * (2.0 * n - 1.0));
    }
    return t;
}

constexpr LogSeries kSeries = make_log_series();

struct KE {
    double K;
    double E;
};

// Fixed-degree Horner evaluation of the four polynomials in m1:
//   K = L A(m1) - B(m1),  E = 1 + L C(m1) - D(m1)
template <int N>
KE log_series_fixed(double m1, double L) {
    double A = kSeries.a[N], B = kSeries.a[N] * kSeries.b[N];
    double C = kSeries.c[N], D = kSeries.c[N] * kSeries.d[N];
    for (int n = N - 1; n >= 1; --n) {
        A = A * m1 + kSeries.a[n];
        B = B * m1 + kSeries.a[n] * kSeries.b[n];
        C = C * m1 + kSeries.c[n];
        D = D * m1 + kSeries.c[n] * kSeries.d[n];
    }
    A = A * m1 + 1.0;
    B = B * m1;
    C = C * m1;
    D = D * m1;
    return {L * A - B, 1.0 + L * C - D};
}

KE elliptic_log_series(double m1) {
    const double L = std::numbers::ln2 * 2.0 - 0.5 * std::log(m1);
    // Truncation error ~ a_{N+1} m1^{N+1} L stays below 1e-17 K in each band.
    if (m1 <= 1e-4) return log_series_fixed<4>(m1, L);
    if (m1 <= 1e-2) return log_series_fixed<8>(m1, L);
    return log_series_fixed<17>(m1, L);
}

KE elliptic_agm(double m, double m1) {
    double a = 1.0;
    double b = std::sqrt(m1);
    double sum = 0.5 * m;
    double pow2 = 0.5;
    for (int it = 0; it < 40; ++it) {
        const double c = 0.5 * (a - b);
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
        pow2 *= 2.0;
        sum += pow2 * c * c;
        if (std::abs(c) <= 1e-17 * a) break;
    }
    const double K = pi / (2.0 * a);
    return {K, K * (1.0 - sum)};
}

// The log series needs about 16 terms at m1 = 0.1 and is cheaper than the
// AGM up to there.
constexpr double kSeriesMaxM1 = 0.1;

// m = k^2 and m1 = 1 - m are passed separately: m1 is computed without
// cancellation by the callers.
KE complete_elliptic(double m, double m1, bool force_series) {
    if (force_series || m1 <= kSeriesMaxM1) return elliptic_log_series(m1);
    return elliptic_agm(m, m1);
}

// P0 = int_0^pi (1 - beta cos a)^{-p} da, P1 = int_0^pi cos a (1 - beta cos a)^{-p} da
struct FarSums {
    double p0;
    double p1;
};

FarSums far_series(double beta, double p) {
    double coeff = 1.0;  // (p)_n / n!
    double bpow = 1.0;
    double g = 1.0;      // (n-1)!!/n!! for the running even index
    double p0 = 0.0;
    double p1 = 0.0;
    for (int n = 0; n < 200; ++n) {
        const double term = coeff * bpow;
        double contrib;
        if (n % 2 == 0) {
            contrib = term * g;
            p0 += contrib;
        } else {
            g *= static_cast<double>(n) / (n + 1);  // advance to index n + 1
            contrib = term * g;
            p1 += contrib;
        }
        if (n > 2 && std::abs(contrib) < 1e-18 * std::abs(p0)) break;
        coeff *= (p + n) / (n + 1);
        bpow *= beta;
    }
    return {pi * p0, pi * p1};
}

// For k^2 < 1/17 the closed forms lose digits to cancellation of order 1/k^4;
// the binomial series in 2/(s^2 + 2) converges fast there and is used instead.
constexpr double kSeriesFormArg = 64.0;

void require_positive(double s, const char* name) {
    if (!(s > 0.0) || std::isnan(s)) {
        throw DomainError(std::string(name) + ": argument must be > 0");
    }
}

}  // namespace

void KernelConfig::validate() const {
    if (!(s_lo > 0.0 && s_lo < s_hi)) throw DomainError("KernelConfig: require 0 < s_lo < s_hi");
    if (!(quad_tol > 0.0 && quad_tol <= 1e-6)) throw DomainError("KernelConfig: quad_tol must be in (0, 1e-6]");
    if (!(delta >= 0.0)) throw DomainError("KernelConfig: delta must be >= 0");
}

std::string_view to_string(Branch b) {
    switch (b) {
        case Branch::asymptotic: return "asymptotic";
        case Branch::elliptic: return "elliptic";
        case Branch::far: return "far";
    }
    return "?";
}

Branch branch_for(double s, const KernelConfig& cfg) {
    if (s <= cfg.s_lo) return Branch::asymptotic;
    if (s >= cfg.s_hi) return Branch::far;
    return Branch::elliptic;
}

double eval_F_unchecked(double s, const KernelConfig& cfg) {
    const Branch br = branch_for(s, cfg);
    if (br == Branch::far || s >= kSeriesFormArg) {
        const double base = s + 2.0;
        return far_series(2.0 / base, 0.5).p1 / std::sqrt(base);
    }
    const double m = 4.0 / (s + 4.0);
    const double m1 = s / (s + 4.0);
    const auto [K, E] = complete_elliptic(m, m1, br == Branch::asymptotic);
    return ((2.0 - m) * K - 2.0 * E) / std::sqrt(m);
}

F1F2 eval_F1F2_unchecked(double s, const KernelConfig& cfg) {
    const Branch br = branch_for(s, cfg);
    const double s2 = s * s;
    if (br == Branch::far || s2 >= kSeriesFormArg) {
        const double base = s2 + 2.0;
        const auto [p0, p1] = far_series(2.0 / base, 1.5);
        const double scale = 1.0 / (base * std::sqrt(base));
        return {scale * p1, scale * (p0 - p1)};
    }
    const double inv = 1.0 / (s2 + 4.0);
    const double m = 4.0 * inv;
    const double m1 = s2 * inv;
    const double k = std::sqrt(m);
    const auto [K, E] = complete_elliptic(m, m1, br == Branch::asymptotic);
    return {0.25 * k * ((2.0 - m) * E / m1 - 2.0 * K), 0.5 * k * (K - E)};
}

double eval_F(double s, const KernelConfig& cfg) {
    require_positive(s, "eval_F");
    return eval_F_unchecked(s, cfg);
}

double eval_F1(double s, const KernelConfig& cfg) {
    require_positive(s, "eval_F1");
    return eval_F1F2_unchecked(s, cfg).f1;
}

double eval_F2(double s, const KernelConfig& cfg) {
    require_positive(s, "eval_F2");
    return eval_F1F2_unchecked(s, cfg).f2;
}

KernelValue biot_savart_kernel(KernelPoint x, KernelPoint xp, const KernelConfig& cfg) {
    if (!(x.r > 0.0) || !(xp.r > 0.0)) throw DomainError("biot_savart_kernel: r and r' must be > 0");
    if (x == xp && cfg.delta == 0.0) throw SingularityError("biot_savart_kernel: coincident points with delta = 0");
    const double s2 = detail::similarity_sq(x.r, x.z, xp.r, xp.z, cfg.delta * cfg.delta);
    const F1F2 f = eval_F1F2_unchecked(std::sqrt(s2), cfg);
    return detail::kernel_from(x.r, x.z, xp.r, xp.z, f);
}

}  // namespace ringlab
