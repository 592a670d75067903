#include "ringlab/diagnostics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ringlab/errors.hpp"
#include "ringlab/parallel.hpp"
#include "ringlab/summation.hpp"

namespace ringlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rows of a triangular double sum are grouped in fixed blocks; each block is
// reduced on its own and the block partials are combined in index order, so
// the result does not depend on the worker count.
constexpr std::size_t kRowBlock = 32;

template <class RowFn>
double blocked_row_sum(std::size_t n, int workers, RowFn&& row) {
    const std::size_t blocks = (n + kRowBlock - 1) / kRowBlock;
    std::vector<double> partial(blocks, 0.0);
    parallel_for(blocks, workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t blk = b; blk < e; ++blk) {
            CompensatedSum acc;
            const std::size_t lo = blk * kRowBlock;
            const std::size_t hi = std::min(n, lo + kRowBlock);
            for (std::size_t j = lo; j < hi; ++j) row(j, acc);
            partial[blk] = acc.value();
        }
    });
    CompensatedSum total;
    for (double v : partial) total.add(v);
    return total.value();
}

void require_delta(const KernelConfig& kcfg, const char* who) {
    if (!(kcfg.delta > 0.0)) throw DomainError(std::string(who) + ": requires delta > 0");
}

}  // namespace

Moments moments(const Cloud& c) {
    CompensatedSum m0, m2;
    for (const auto& p : c.particles) {
        m0.add(p.gamma);
        m2.add(p.r * p.r * p.gamma);
    }
    return {m0.value(), m2.value()};
}

double energy_E(const Cloud& c, const KernelConfig& kcfg, int workers) {
    require_delta(kcfg, "energy_E");
    const auto& P = c.particles;
    const double d2 = kcfg.delta * kcfg.delta;
    const double total = blocked_row_sum(P.size(), workers, [&](std::size_t j, CompensatedSum& acc) {
        const Particle& a = P[j];
        acc.add(a.r * eval_F_unchecked(d2 / (a.r * a.r), kcfg) * a.gamma * a.gamma);
        double row = 0.0;
        for (std::size_t k = j + 1; k < P.size(); ++k) {
            const Particle& b = P[k];
            const double s2 = detail::similarity_sq(a.r, a.z, b.r, b.z, d2);
            row += std::sqrt(a.r * b.r) * eval_F_unchecked(s2, kcfg) * b.gamma;
        }
        acc.add(2.0 * row * a.gamma);
    });
    return total * detail::inv_two_pi;
}

double energy_E1(const Cloud& c, const KernelConfig& kcfg, int workers) {
    require_delta(kcfg, "energy_E1");
    const auto& P = c.particles;
    const double d2 = kcfg.delta * kcfg.delta;
    const double total = blocked_row_sum(P.size(), workers, [&](std::size_t j, CompensatedSum& acc) {
        const Particle& a = P[j];
        acc.add(-0.5 * std::log(d2) * a.r * a.gamma * a.gamma);
        double row = 0.0;
        for (std::size_t k = j + 1; k < P.size(); ++k) {
            const Particle& b = P[k];
            const double dr = a.r - b.r;
            const double dz = a.z - b.z;
            const double dist2 = dr * dr + dz * dz;
            if (dist2 > 1.0) continue;
            row += -0.5 * std::log(dist2 + d2) * std::sqrt(a.r * b.r) * b.gamma;
        }
        acc.add(2.0 * row * a.gamma);
    });
    return total * detail::inv_two_pi;
}

double pair_concentration(const Cloud& c, double R) {
    if (!(R >= 1.0)) throw DomainError("pair_concentration: R must be >= 1");
    const auto& P = c.particles;
    const double cut = R * c.epsilon * c.r0;
    const double cut2 = cut * cut;
    CompensatedSum acc;
    for (std::size_t j = 0; j < P.size(); ++j) {
        double row = 0.0;
        for (std::size_t k = 0; k < P.size(); ++k) {
            if (k == j) continue;
            const double dr = P[j].r - P[k].r;
            const double dz = P[j].z - P[k].z;
            if (dr * dr + dz * dz >= cut2) row += P[k].gamma;
        }
        acc.add((1.0 + P[j].r * P[j].r) * P[j].gamma * row);
    }
    return acc.value();
}

CenterEstimate find_center(const Cloud& c, double rho) {
    if (c.empty()) throw EmptySelectionError("find_center: empty cloud");
    if (!(rho > 0.0)) throw DomainError("find_center: rho must be positive");
    const auto& P = c.particles;
    const double bin = 0.5 * rho;
    const double rho2 = rho * rho;

    struct Bin {
        CompensatedSum g, gr, gz;
    };
    std::map<std::pair<std::int64_t, std::int64_t>, Bin> bins;
    for (const auto& p : P) {
        auto& b = bins[{static_cast<std::int64_t>(std::floor(p.r / bin)), static_cast<std::int64_t>(std::floor(p.z / bin))}];
        b.g.add(p.gamma);
        b.gr.add(p.gamma * p.r);
        b.gz.add(p.gamma * p.z);
    }
    struct Heavy {
        double mass;
        KernelPoint centroid;
    };
    std::vector<Heavy> heavy;
    heavy.reserve(bins.size());
    for (const auto& [key, b] : bins) {
        const double g = b.g.value();
        if (g > 0.0) heavy.push_back({g, {b.gr.value() / g, b.gz.value() / g}});
    }
    if (heavy.empty()) throw EmptySelectionError("find_center: no positive mass");
    // Stable: equal masses keep the (r, z) bin order of the map.
    std::stable_sort(heavy.begin(), heavy.end(), [](const Heavy& a, const Heavy& b) { return a.mass > b.mass; });
    if (heavy.size() > 64) heavy.resize(64);

    auto ball_mass = [&](KernelPoint x) {
        CompensatedSum m;
        for (const auto& p : P) {
            const double dr = p.r - x.r;
            const double dz = p.z - x.z;
            if (dr * dr + dz * dz <= rho2) m.add(p.gamma);
        }
        return m.value();
    };

    KernelPoint best{};
    double best_mass = -1.0;
    for (const auto& h : heavy) {
        // One mean-shift step from the bin centroid.
        CompensatedSum g, gr, gz;
        for (const auto& p : P) {
            const double dr = p.r - h.centroid.r;
            const double dz = p.z - h.centroid.z;
            if (dr * dr + dz * dz <= rho2) {
                g.add(p.gamma);
                gr.add(p.gamma * p.r);
                gz.add(p.gamma * p.z);
            }
        }
        KernelPoint cand = h.centroid;
        if (g.value() > 0.0) cand = {gr.value() / g.value(), gz.value() / g.value()};
        const double m = ball_mass(cand);
        bool better = m > best_mass;
        if (m == best_mass) {
            const double da = std::abs(cand.r - c.r0);
            const double db = std::abs(best.r - c.r0);
            better = da < db || (da == db && cand.z < best.z);
        }
        if (better) {
            best_mass = m;
            best = cand;
        }
    }

    CenterEstimate out;
    out.center = best;
    CompensatedSum plain, weighted;
    for (const auto& p : P) {
        const double dr = p.r - best.r;
        const double dz = p.z - best.z;
        if (dr * dr + dz * dz > rho2) {
            plain.add(p.gamma);
            weighted.add((1.0 + p.r * p.r) * p.gamma);
        }
    }
    out.leak_plain = plain.value();
    out.leak_weighted = weighted.value();
    return out;
}

double weighted_axial_moment(const Cloud& c, double V) {
    CompensatedSum acc;
    const double shift = V * c.time;
    for (const auto& p : c.particles) {
        const double y = p.z - shift;
        acc.add(std::sqrt(1.0 + y * y) * p.r * p.r * p.gamma);
    }
    return acc.value();
}

double barycenter_z(const Cloud& c, TagFilter filter) {
    CompensatedSum g, gz;
    for (const auto& p : c.particles) {
        if (!selects(filter, p.tag)) continue;
        g.add(p.gamma);
        gz.add(p.gamma * p.z);
    }
    if (!(g.value() > 0.0)) throw EmptySelectionError("barycenter_z: no mass in selection");
    return gz.value() / g.value();
}

double diam_z(const Cloud& c, TagFilter filter) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : c.particles) {
        if (!selects(filter, p.tag)) continue;
        lo = std::min(lo, p.z);
        hi = std::max(hi, p.z);
    }
    if (lo > hi) throw EmptySelectionError("diam_z: empty selection");
    return hi - lo;
}

double kelvin_hicks_speed(double mu, double r0, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("kelvin_hicks_speed: eps must lie in (0, 1)");
    if (!(r0 > 0.0)) throw DomainError("kelvin_hicks_speed: r0 must be positive");
    return mu * std::abs(std::log(eps)) / (4.0 * std::numbers::pi * r0);
}

LinearFit fit_speed(std::span<const std::pair<double, double>> series, double trim_fraction) {
    if (series.empty()) throw DomainError("fit_speed: insufficient samples");
    const double t0 = series.front().first;
    const double t1 = series.back().first;
    const double cut = t0 + trim_fraction * (t1 - t0);
    std::vector<std::pair<double, double>> kept;
    for (const auto& s : series)
        if (s.first >= cut) kept.push_back(s);
    if (kept.size() < 8) throw DomainError("fit_speed: insufficient samples after trimming");

    const double n = static_cast<double>(kept.size());
    CompensatedSum st, sy;
    for (const auto& [t, y] : kept) {
        st.add(t);
        sy.add(y);
    }
    const double tm = st.value() / n;
    const double ym = sy.value() / n;
    CompensatedSum stt, sty;
    for (const auto& [t, y] : kept) {
        stt.add((t - tm) * (t - tm));
        sty.add((t - tm) * (y - ym));
    }
    if (!(stt.value() > 0.0)) throw DomainError("fit_speed: degenerate time samples");
    LinearFit f;
    f.slope = sty.value() / stt.value();
    f.intercept = ym - f.slope * tm;
    f.samples = kept.size();
    for (const auto& [t, y] : kept) f.residual = std::max(f.residual, std::abs(y - (f.intercept + f.slope * t)));
    return f;
}

double filament_thickness(const Cloud& c, TagFilter filter, double z_lo, double z_hi, int slices) {
    if (!(z_hi > z_lo) || slices < 1) throw DomainError("filament_thickness: invalid band");
    const double w = (z_hi - z_lo) / slices;
    std::vector<double> rmin(slices, std::numeric_limits<double>::infinity());
    std::vector<double> rmax(slices, -std::numeric_limits<double>::infinity());
    std::vector<int> count(slices, 0);
    for (const auto& p : c.particles) {
        if (!selects(filter, p.tag) || p.z < z_lo || p.z > z_hi) continue;
        const int k = std::min(slices - 1, static_cast<int>((p.z - z_lo) / w));
        rmin[k] = std::min(rmin[k], p.r);
        rmax[k] = std::max(rmax[k], p.r);
        ++count[k];
    }
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < slices; ++k)
        if (count[k] >= 2) best = std::min(best, rmax[k] - rmin[k]);
    if (!std::isfinite(best)) throw EmptySelectionError("filament_thickness: no populated slice in band");
    return best;
}

DiagnosticsRecord compute_record(const Cloud& c, const KernelConfig& kcfg, const DiagnosticsSettings& s,
                                 std::int64_t step) {
    DiagnosticsRecord rec;
    rec.step = step;
    rec.t = c.time;
    const Moments m = moments(c);
    rec.m0 = m.m0;
    rec.m2 = m.m2;
    const bool has_delta = kcfg.delta > 0.0;
    rec.energy_e = has_delta ? energy_E(c, kcfg, s.workers) : kNaN;
    rec.energy_e1 = has_delta ? energy_E1(c, kcfg, s.workers) : kNaN;

    const double rho = s.rho > 0.0 ? s.rho : c.r0 * std::sqrt(c.epsilon);
    const double R = s.R > 0.0 ? s.R : 1.0 / std::sqrt(c.epsilon);
    rec.v_kh = kelvin_hicks_speed(c.mu, c.r0, c.epsilon);
    rec.a_t = weighted_axial_moment(c, rec.v_kh);
    rec.pair_conc = pair_concentration(c, R);

    rec.r_star = rec.z_star = rec.leak_plain = rec.leak_weighted = kNaN;
    rec.diam_z_all = rec.diam_z_tagged = rec.zbar_d = rec.thickness_proxy = kNaN;
    if (c.empty()) return rec;

    const CenterEstimate ce = find_center(c, rho);
    rec.r_star = ce.center.r;
    rec.z_star = ce.center.z;
    rec.leak_plain = ce.leak_plain;
    rec.leak_weighted = ce.leak_weighted;
    rec.diam_z_all = diam_z(c, TagFilter::all);

    bool any_tagged = false, any_diffuse = false;
    double zmin_thick = std::numeric_limits<double>::infinity();
    for (const auto& p : c.particles) {
        any_tagged = any_tagged || selects(s.tagged, p.tag);
        any_diffuse = any_diffuse || p.tag == Tag::diffuse_d;
        if (selects(s.thickness_filter, p.tag)) zmin_thick = std::min(zmin_thick, p.z);
    }
    if (any_tagged) rec.diam_z_tagged = diam_z(c, s.tagged);
    if (any_diffuse) rec.zbar_d = barycenter_z(c, TagFilter::diffuse_d);
    const double z_hi = rec.z_star - rho;
    if (std::isfinite(zmin_thick) && z_hi > zmin_thick) {
        try {
            rec.thickness_proxy = filament_thickness(c, s.thickness_filter, zmin_thick, z_hi, s.thickness_slices);
        } catch (const EmptySelectionError&) {
        }
    }
    return rec;
}

RunFits compute_run_fits(std::span<const DiagnosticsRecord> recs, double eps, double r0, double trim_fraction) {
    RunFits f;
    if (recs.empty()) return f;
    f.v_kh = recs.front().v_kh;
    const double L = std::abs(std::log(eps));
    const double t0 = recs.front().t;
    const double t1 = recs.back().t;
    const double cut = t0 + trim_fraction * (t1 - t0);

    auto fit = [&](auto get) -> std::optional<LinearFit> {
        std::vector<std::pair<double, double>> series;
        for (const auto& r : recs) {
            const double y = get(r);
            if (std::isfinite(y)) series.emplace_back(r.t, y);
        }
        try {
            return fit_speed(series, trim_fraction);
        } catch (const DomainError&) {
            return std::nullopt;
        }
    };
    f.speed = fit([](const DiagnosticsRecord& r) { return r.z_star; });
    f.a_slope = fit([](const DiagnosticsRecord& r) { return r.a_t; });
    f.zbar_d = fit([](const DiagnosticsRecord& r) { return r.zbar_d; });
    f.diam_z_tagged = fit([](const DiagnosticsRecord& r) { return r.diam_z_tagged; });

    double pmin = std::numeric_limits<double>::infinity(), pmax = 0.0;
    for (const auto& r : recs) {
        if (std::isfinite(r.r_star)) f.radial_envelope = std::max(f.radial_envelope, std::abs(r.r_star - r0) * L);
        if (std::isfinite(r.leak_weighted)) f.leak_envelope = std::max(f.leak_envelope, r.leak_weighted * L);
        if (std::isfinite(r.pair_conc)) f.pair_conc_max = std::max(f.pair_conc_max, r.pair_conc);
        if (r.t >= cut && std::isfinite(r.thickness_proxy) && std::isfinite(r.diam_z_tagged)) {
            const double p = r.thickness_proxy * r.diam_z_tagged;
            pmin = std::min(pmin, p);
            pmax = std::max(pmax, p);
        }
    }
    f.thickness_product_ratio = (pmax > 0.0 && std::isfinite(pmin) && pmin > 0.0) ? pmax / pmin : kNaN;
    return f;
}

// --- CSV --------------------------------------------------------------------

const std::vector<std::string>& diagnostics_columns() {
    static const std::vector<std::string> cols = {
        "step",      "t",          "m0",           "m2",          "energy_e",   "energy_e1",
        "r_star",    "z_star",     "leak_plain",   "leak_weighted", "a_t",      "zbar_d",
        "diam_z_all", "diam_z_tagged", "pair_conc", "v_kh",        "thickness_proxy"};
    return cols;
}

void write_csv_header(std::ostream& os) {
    const auto& cols = diagnostics_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
}

namespace {

void put(std::ostream& os, double v) {
    if (std::isnan(v)) {
        os << ",nan";
        return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    os << buf;
}

}  // namespace

std::vector<double> record_values(const DiagnosticsRecord& r) {
    return {static_cast<double>(r.step), r.t, r.m0, r.m2, r.energy_e, r.energy_e1, r.r_star, r.z_star,
            r.leak_plain, r.leak_weighted, r.a_t, r.zbar_d, r.diam_z_all, r.diam_z_tagged, r.pair_conc, r.v_kh,
            r.thickness_proxy};
}

void write_csv_row(std::ostream& os, const DiagnosticsRecord& r) {
    os << r.step;
    const auto v = record_values(r);
    for (std::size_t i = 1; i < v.size(); ++i) put(os, v[i]);
    os << '\n';
}

DiagnosticsRecord parse_csv_row(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != diagnostics_columns().size())
        throw DomainError("diagnostics CSV: expected " + std::to_string(diagnostics_columns().size()) +
                          " fields, got " + std::to_string(f.size()));
    auto num = [&](std::size_t i) {
        char* end = nullptr;
        const double v = std::strtod(f[i].c_str(), &end);
        if (end == f[i].c_str() || *end != '\0') throw DomainError("diagnostics CSV: bad number '" + f[i] + "'");
        return v;
    };
    DiagnosticsRecord r;
    r.step = std::stoll(f[0]);
    double* dst[] = {&r.t,        &r.m0,     &r.m2,         &r.energy_e,      &r.energy_e1, &r.r_star,
                     &r.z_star,   &r.leak_plain, &r.leak_weighted, &r.a_t,     &r.zbar_d,    &r.diam_z_all,
                     &r.diam_z_tagged, &r.pair_conc, &r.v_kh, &r.thickness_proxy};
    for (std::size_t i = 0; i < std::size(dst); ++i) *dst[i] = num(i + 1);
    return r;
}

std::vector<DiagnosticsRecord> read_diagnostics_csv(std::istream& is) {
    std::vector<DiagnosticsRecord> out;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("step,", 0) == 0) continue;
        }
        out.push_back(parse_csv_row(line));
    }
    return out;
}

}  // namespace ringlab
