#include "ringlab/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ringlab/diagnostics.hpp"
#include "ringlab/errors.hpp"
#include "ringlab/summation.hpp"

namespace ringlab {

std::vector<KernelPoint> Cloud::positions() const {
    std::vector<KernelPoint> out;
    out.reserve(particles.size());
    for (const auto& p : particles) out.push_back(p.position());
    return out;
}

std::string_view to_string(Tag t) {
    switch (t) {
        case Tag::core_m: return "core_m";
        case Tag::diffuse_d: return "diffuse_d";
        case Tag::untagged: break;
    }
    return "untagged";
}

Tag tag_from_string(std::string_view s) {
    if (s == "core_m") return Tag::core_m;
    if (s == "diffuse_d") return Tag::diffuse_d;
    if (s == "untagged") return Tag::untagged;
    throw DomainError("unknown tag '" + std::string(s) + "'");
}

bool selects(TagFilter f, Tag t) {
    switch (f) {
        case TagFilter::all: return true;
        case TagFilter::core_m: return t == Tag::core_m;
        case TagFilter::diffuse_d: return t == Tag::diffuse_d;
        case TagFilter::tagged: return t != Tag::untagged;
        case TagFilter::untagged: return t == Tag::untagged;
    }
    return false;
}

std::string_view to_string(TagFilter f) {
    switch (f) {
        case TagFilter::all: return "all";
        case TagFilter::core_m: return "core_m";
        case TagFilter::diffuse_d: return "diffuse_d";
        case TagFilter::tagged: return "tagged";
        case TagFilter::untagged: return "untagged";
    }
    return "all";
}

TagFilter tag_filter_from_string(std::string_view s) {
    for (auto f : {TagFilter::all, TagFilter::core_m, TagFilter::diffuse_d, TagFilter::tagged, TagFilter::untagged})
        if (to_string(f) == s) return f;
    throw DomainError("unknown tag filter '" + std::string(s) + "'");
}

// --- profiles ---------------------------------------------------------------

double Profile::operator()(double rho) const {
    if (!(rho < 1.0)) return 0.0;
    switch (kind) {
        case Kind::gaussian: {
            const double q = 1.0 - rho * rho;
            return amplitude * std::exp(-rho * rho / (2.0 * width * width)) * q * q;
        }
        case Kind::flat: {
            const double edge = 1.0 - width;
            if (rho <= edge) return amplitude;
            return amplitude * 0.5 * (1.0 + std::cos(std::numbers::pi * (rho - edge) / width));
        }
    }
    return 0.0;
}

std::string_view to_string(Profile::Kind k) { return k == Profile::Kind::flat ? "flat" : "gaussian"; }

Profile::Kind profile_kind_from_string(std::string_view s) {
    if (s == "gaussian") return Profile::Kind::gaussian;
    if (s == "flat") return Profile::Kind::flat;
    throw DomainError("unknown profile '" + std::string(s) + "'");
}

namespace {

// Cells of the seeding grid (offsets i, j in units of h) whose centers fall
// inside the unit ball of the profile.
template <class Fn>
void for_each_cell(double h_over_eps, Fn&& fn) {
    const int n = static_cast<int>(std::ceil(1.0 / h_over_eps));
    for (int i = -n; i <= n; ++i) {
        for (int j = -n; j <= n; ++j) {
            const double rho = h_over_eps * std::sqrt(double(i) * i + double(j) * j);
            if (rho < 1.0) fn(i, j, rho);
        }
    }
}

}  // namespace

double grid_integral(const Profile& f, double h_over_eps) {
    if (!(h_over_eps > 0.0)) throw DomainError("grid_integral: spacing must be positive");
    CompensatedSum acc;
    for_each_cell(h_over_eps, [&](int, int, double rho) { acc.add(f(rho)); });
    return acc.value() * h_over_eps * h_over_eps;
}

Profile normalize_on_grid(Profile f, double h_over_eps) {
    f.amplitude = 1.0;
    f.amplitude = 1.0 / grid_integral(f, h_over_eps);
    return f;
}

Cloud generate_blob(const BlobParams& p) {
    if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) throw DomainError("generate_blob: epsilon must lie in (0, 1)");
    if (!(p.h > 0.0)) throw DomainError("generate_blob: h must be positive");
    if (p.h > p.epsilon / 8.0 * (1.0 + 1e-12)) throw DomainError("generate_blob: h must be <= eps/8");
    if (p.mu < 0.0) throw DomainError("generate_blob: mu must be nonnegative");
    if (p.mu == 0.0) throw EmptySelectionError("generate_blob: mu = 0 leaves no admissible particles");

    const double hoe = p.h / p.epsilon;
    const double norm = grid_integral(p.profile, hoe);
    if (std::abs(norm - 1.0) > 1e-6)
        throw DomainError("generate_blob: profile integral on the seeding grid is " + std::to_string(norm) +
                          ", expected 1");

    struct Cell {
        int i, j;
        double gamma;
    };
    std::vector<Cell> cells;
    for_each_cell(hoe, [&](int i, int j, double rho) {
        const double g = p.mu * p.profile(rho) * hoe * hoe;
        if (g > 0.0) cells.push_back({i, j, g});
    });
    const double drop = 1e-14 * p.mu / static_cast<double>(std::max<std::size_t>(cells.size(), 1));

    Cloud c;
    c.epsilon = p.epsilon;
    c.mu = p.mu;
    c.r0 = p.x0.r;
    c.h = p.h;
    const double area = p.h * p.h;
    for (const auto& cell : cells) {
        if (cell.gamma <= drop) continue;
        Particle q;
        q.r = p.x0.r + cell.i * p.h;
        q.z = p.x0.z + cell.j * p.h;
        if (!(q.r > 0.0)) throw DomainError("generate_blob: blob support overlaps the axis");
        q.gamma = cell.gamma;
        q.xi0 = cell.gamma / area / q.r;
        q.tag = p.tag;
        c.particles.push_back(q);
    }
    if (c.empty()) throw EmptySelectionError("generate_blob: no admissible particles");
    return c;
}

// --- assumptions ------------------------------------------------------------

AssumptionReport validate_assumptions(const Cloud& c, const AssumptionConstants& k, const KernelConfig& kcfg) {
    AssumptionReport rep;
    const double L = std::abs(std::log(c.epsilon));
    double xi_max = 0.0;
    for (const auto& p : c.particles) xi_max = std::max(xi_max, p.xi0);
    rep.max_xi_over_eps2 = xi_max * c.epsilon * c.epsilon;

    const Moments m = moments(c);
    rep.m0_gap = std::abs(m.m0 - c.mu) * L;
    rep.m2_gap = std::abs(m.m2 - c.r0 * c.r0 * c.mu) * L;
    try {
        rep.energy = c.empty() ? 0.0 : energy_E(c, kcfg);
    } catch (const Error&) {
        rep.energy = std::numeric_limits<double>::quiet_NaN();
    }
    rep.energy_gap = std::abs(rep.energy - c.r0 * c.mu * c.mu / (2.0 * std::numbers::pi) * L);
    rep.a0 = weighted_axial_moment(c, 0.0);

    const bool nonempty = !c.empty();
    bool nonneg = true;
    for (const auto& p : c.particles) nonneg = nonneg && p.gamma >= 0.0;
    rep.pass[0] = nonneg && rep.max_xi_over_eps2 < k.c1;
    rep.pass[1] = nonempty && rep.m0_gap < k.c2;
    rep.pass[2] = nonempty && rep.m2_gap < k.c3;
    rep.pass[3] = nonempty && rep.energy_gap < k.c4;  // NaN compares false
    rep.pass[4] = std::isfinite(rep.a0);
    return rep;
}

// --- fat ring ---------------------------------------------------------------

FilamentationData generate_filamentation_data(const BlobParams& core, const PatchParams& patch, double C_d,
                                              const AssumptionConstants& k, const KernelConfig& kcfg) {
    if (!(C_d > 0.0)) throw DomainError("generate_filamentation_data: C_d must be positive");
    if (!(patch.spacing > 0.0) || !(patch.inner_radius >= 0.0) || !(patch.outer_radius > patch.inner_radius))
        throw DomainError("generate_filamentation_data: invalid patch geometry");
    if (!(patch.level >= 0.0)) throw DomainError("generate_filamentation_data: patch level must be nonnegative");
    if (!std::isfinite(patch.offset_r) || !std::isfinite(patch.offset_z))
        throw DomainError("generate_filamentation_data: non-finite patch offset");

    BlobParams cp = core;
    cp.tag = Tag::core_m;
    Cloud c = generate_blob(cp);

    const double s = patch.spacing;
    const int n = static_cast<int>(std::ceil(patch.outer_radius / s));
    CompensatedSum wd_l1;
    std::size_t patch_count = 0;
    double min_r = std::numeric_limits<double>::infinity();
    std::vector<Particle> diffuse;
    for (int i = -n; i <= n; ++i) {
        for (int j = -n; j <= n; ++j) {
            const double d = s * std::sqrt(double(i) * i + double(j) * j);
            if (d < patch.inner_radius || d > patch.outer_radius) continue;
            Particle q;
            q.r = core.x0.r + patch.offset_r + i * s;
            q.z = core.x0.z + patch.offset_z + j * s;
            if (!(q.r > 0.0)) throw DomainError("generate_filamentation_data: patch overlaps the axis");
            min_r = std::min(min_r, q.r);
            ++patch_count;
            if (patch.level <= 0.0) continue;
            q.gamma = patch.level * s * s;
            q.xi0 = patch.level / q.r;
            q.tag = Tag::diffuse_d;
            wd_l1.add(q.gamma);
            diffuse.push_back(q);
        }
    }
    if (patch_count == 0) throw DomainError("generate_filamentation_data: patch contains no grid cells");
    if (min_r < patch.c5) throw DomainError("generate_filamentation_data: patch closer to the axis than c5");

    const double L = std::abs(std::log(core.epsilon));
    DecompositionCheck dc;
    dc.sup_wd_over_r = patch.level > 0.0 ? patch.level / min_r : 0.0;
    dc.wd_l1 = wd_l1.value();
    dc.bound = L * L / C_d * dc.wd_l1;
    dc.patch_area = static_cast<double>(patch_count) * s * s;
    dc.core_mass = core.mu;
    const double total = core.mu + dc.wd_l1;
    dc.holds = dc.sup_wd_over_r > 0.0 && dc.sup_wd_over_r <= dc.bound && dc.patch_area >= C_d / (L * L) &&
               dc.core_mass >= 0.5 * total;
    if (!dc.holds) throw DomainError("generate_filamentation_data: decomposition inequality fails at seeding");

    c.particles.insert(c.particles.end(), diffuse.begin(), diffuse.end());
    c.mu = total;

    FilamentationData out;
    out.report = validate_assumptions(c, k, kcfg);
    out.decomposition = dc;
    out.cloud = std::move(c);
    return out;
}

// --- symmetries -------------------------------------------------------------

Cloud scale(const Cloud& c, double lambda, double gamma) {
    if (!(lambda > 0.0) || !(gamma > 0.0)) throw DomainError("scale: factors must be positive");
    Cloud out = c;
    const double wfac = gamma / (lambda * lambda);
    for (auto& p : out.particles) {
        p.r /= lambda;
        p.z /= lambda;
        p.gamma *= wfac;
        p.xi0 *= gamma * lambda;
    }
    out.mu *= wfac;
    out.r0 /= lambda;
    out.h /= lambda;
    out.time /= gamma;
    return out;
}

Normalized normalize(const Cloud& c) {
    const Moments m = moments(c);
    if (!(m.m0 > 0.0) || !(m.m2 > 0.0)) throw DomainError("normalize: degenerate moments");
    Normalized n;
    n.gamma = m.m2 / (m.m0 * m.m0);
    n.lambda = std::sqrt(m.m2 / m.m0);
    n.cloud = scale(c, n.lambda, n.gamma);
    return n;
}

Cloud mirror_z(const Cloud& c) {
    Cloud out = c;
    for (auto& p : out.particles) p.z = -p.z;
    return out;
}

Cloud translate_z(const Cloud& c, double dz) {
    Cloud out = c;
    for (auto& p : out.particles) p.z += dz;
    return out;
}

}  // namespace ringlab
