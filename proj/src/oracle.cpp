#include "ringlab/oracle.hpp"

#include <cmath>
#include <numbers>
#include <queue>

#include "ringlab/errors.hpp"

namespace ringlab::oracle {

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr long double kXgk[8] = {
    0.991455371120812639206854697526329L, 0.949107912342758524526189684047851L,
    0.864864423359769072789712788640926L, 0.741531185599394439863864773280788L,
    0.586087235467691130294144845693013L, 0.405845151377397166906606412076961L,
    0.207784955007898467600689403773245L, 0.000000000000000000000000000000000L};
constexpr long double kWgk[8] = {
    0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
    0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
    0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
    0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L};
constexpr long double kWg[4] = {0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
                                0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L};

constexpr long double kPi = std::numbers::pi_v<long double>;

struct Piece {
    long double a, b, value, err;
    bool operator<(const Piece& o) const { return err < o.err; }
};

// Below this argument the integrand is concentrated in a layer of width s
// around a = 0 and the substitution a = s sinh(t) is used.
constexpr double kSinhSwitch = 0.1;

void require_arg(double s, const char* who) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError(std::string(who) + ": argument must be positive");
}

// int_0^pi g(a, D(a)) da with D = w^2 + 4 sin^2(a/2).
template <class G>
QuadResult kernel_integral(double w, G g, const QuadOptions& opt) {
    const long double w2 = static_cast<long double>(w) * w;
    auto D = [w2](long double a) {
        const long double h = std::sin(0.5L * a);
        return w2 + 4.0L * h * h;
    };
    if (w >= kSinhSwitch) return integrate([&](long double a) { return g(a, D(a)); }, 0.0L, kPi, opt);
    const long double W = w;
    const long double t_max = std::asinh(kPi / W);
    return integrate(
        [&](long double t) {
            const long double a = W * std::sinh(t);
            return g(a, D(a)) * W * std::cosh(t);
        },
        0.0L, t_max, opt);
}

}  // namespace

RulePair gauss_kronrod_15(const Integrand& f, long double a, long double b) {
    const long double c = 0.5L * (a + b);
    const long double h = 0.5L * (b - a);
    const long double fc = f(c);
    long double k = fc * kWgk[7];
    long double g = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const long double dx = h * kXgk[j];
        const long double sum = f(c - dx) + f(c + dx);
        k += kWgk[j] * sum;
        if (j % 2 == 1) g += kWg[j / 2] * sum;
    }
    return {k * h, g * h};
}

QuadResult integrate(const Integrand& f, long double a, long double b, const QuadOptions& opt) {
    auto eval = [&](long double lo, long double hi) {
        const RulePair rp = gauss_kronrod_15(f, lo, hi);
        return Piece{lo, hi, rp.kronrod, std::fabs(rp.kronrod - rp.gauss)};
    };
    std::priority_queue<Piece> heap;
    heap.push(eval(a, b));
    long double total = heap.top().value;
    long double err = heap.top().err;
    std::size_t splits = 0;
    while (!(err <= opt.rel_tol * std::fabs(total))) {
        if (splits >= opt.max_subdivisions)
            throw NonConvergenceError("oracle quadrature: subdivision budget exhausted");
        const Piece worst = heap.top();
        heap.pop();
        const long double mid = 0.5L * (worst.a + worst.b);
        const Piece left = eval(worst.a, mid);
        const Piece right = eval(mid, worst.b);
        heap.push(left);
        heap.push(right);
        ++splits;
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        if (splits % 64 == 0) {
            // Re-sum from scratch so the running totals do not drift.
            total = 0;
            err = 0;
            for (auto copy = heap; !copy.empty(); copy.pop()) {
                total += copy.top().value;
                err += copy.top().err;
            }
        }
    }
    return {static_cast<double>(total), static_cast<double>(err), splits};
}

QuadResult quad_F(double s, const QuadOptions& opt) {
    require_arg(s, "quad_F");
    return kernel_integral(
        std::sqrt(s), [](long double a, long double d) { return std::cos(a) / std::sqrt(d); }, opt);
}

QuadResult quad_F1(double s, const QuadOptions& opt) {
    require_arg(s, "quad_F1");
    return kernel_integral(
        s, [](long double a, long double d) { return std::cos(a) / (d * std::sqrt(d)); }, opt);
}

QuadResult quad_F2(double s, const QuadOptions& opt) {
    require_arg(s, "quad_F2");
    return kernel_integral(
        s,
        [](long double a, long double d) {
            const long double h = std::sin(0.5L * a);
            return 2.0L * h * h / (d * std::sqrt(d));
        },
        opt);
}

namespace {

void require_small(double s, const char* who) {
    if (!(s > 0.0) || s > 1.0) throw DomainError(std::string(who) + ": argument must lie in (0, 1]");
}

}  // namespace

double asymptotic_F(double s) {
    require_small(s, "asymptotic_F");
    return 0.5 * std::log(1.0 / s) + std::log(8.0) - 2.0;
}

double asymptotic_F1(double s) {
    require_small(s, "asymptotic_F1");
    return 1.0 / (s * s) - 0.375 * std::log(1.0 / s);
}

double asymptotic_F2(double s) {
    require_small(s, "asymptotic_F2");
    return 0.5 * std::log(1.0 / s) + (3.0 * std::log(2.0) - 1.0) / 2.0;
}

namespace {

struct LongSum {
    long double sum = 0, comp = 0;
    void add(long double x) {
        const long double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    long double value() const { return sum + comp; }
};

void add_reference_term(LongSum& ur, LongSum& uz, const KernelPoint& x, const Particle& p, long double d2) {
    const long double r = x.r, z = x.z, rp = p.r, zp = p.z;
    const long double dr = r - rp, dz = z - zp;
    const long double s2 = (dr * dr + dz * dz + d2) / (r * rp);
    if (s2 == 0) throw SingularityError("direct_velocity_reference: coincident points with delta = 0");
    const long double m = 4.0L / (s2 + 4.0L);
    const long double m1 = s2 / (s2 + 4.0L);
    const long double k = std::sqrt(m);
    const long double K = std::comp_ellint_1(k);
    const long double E = std::comp_ellint_2(k);
    const long double f1 = 0.25L * k * ((2.0L - m) * E / m1 - 2.0L * K);
    const long double f2 = 0.5L * k * (K - E);
    const long double c = 1.0L / (2.0L * kPi);
    const long double q = std::sqrt(r * rp);
    ur.add(c * f1 * dz / (r * q) * p.gamma);
    uz.add(c * (f2 * std::sqrt(rp / r) / r - f1 * dr / (r * q)) * p.gamma);
}

}  // namespace

std::vector<VelocitySample> direct_velocity_reference(const Cloud& c, std::span<const KernelPoint> targets,
                                                      const KernelConfig& kcfg) {
    for (const auto& p : c.particles)
        if (!(p.r > 0.0)) throw DomainError("direct_velocity_reference: source with r <= 0");
    const double r_min = axis_guard(c);
    const long double d2 = static_cast<long double>(kcfg.delta) * kcfg.delta;
    std::vector<VelocitySample> out(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const KernelPoint& x = targets[i];
        if (!(x.r >= r_min)) throw DomainError("direct_velocity_reference: target closer to the axis than r_min");
        LongSum ur, uz;
        bool skipped = false;
        for (const auto& p : c.particles) {
            if (p.r == x.r && p.z == x.z) {
                if (!skipped) {
                    skipped = true;
                    continue;
                }
                if (d2 == 0) throw SingularityError("direct_velocity_reference: repeated coincidence at delta = 0");
            }
            add_reference_term(ur, uz, x, p, d2);
        }
        out[i] = {static_cast<double>(ur.value()), static_cast<double>(uz.value())};
    }
    return out;
}

}  // namespace ringlab::oracle
