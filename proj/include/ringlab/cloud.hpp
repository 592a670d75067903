#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "ringlab/kernels.hpp"

namespace ringlab {

enum class Tag { untagged, core_m, diffuse_d };

std::string_view to_string(Tag t);
Tag tag_from_string(std::string_view s);

/// One Lagrangian vortex element. gamma and xi0 are fixed at seeding.
struct Particle {
    double r = 1.0;
    double z = 0.0;
    double gamma = 0.0;  ///< circulation mass w * (cell area)
    double xi0 = 0.0;    ///< w0 / r at the seed point
    Tag tag = Tag::untagged;

    KernelPoint position() const { return {r, z}; }
    friend bool operator==(const Particle&, const Particle&) = default;
};

/// Discrete vorticity field plus scenario parameters.
struct Cloud {
    std::vector<Particle> particles;
    double epsilon = 0.01;  ///< concentration scale
    double mu = 1.0;        ///< target circulation
    double r0 = 1.0;        ///< target ring radius
    double time = 0.0;
    double h = 0.0;         ///< seeding grid spacing of the core (0 when unknown)

    std::size_t size() const { return particles.size(); }
    bool empty() const { return particles.empty(); }
    std::vector<KernelPoint> positions() const;
};

/// Which particles a reduction looks at.
enum class TagFilter { all, core_m, diffuse_d, tagged, untagged };

bool selects(TagFilter f, Tag t);
std::string_view to_string(TagFilter f);
TagFilter tag_filter_from_string(std::string_view s);

/// Radially symmetric, compactly supported (unit ball), C^1 profile f(|y|).
struct Profile {
    enum class Kind { gaussian, flat };

    Kind kind = Kind::gaussian;
    /// gaussian: width sigma of exp(-rho^2 / (2 sigma^2)) (1 - rho^2)^2;
    /// flat: width of the cosine edge taper.
    double width = 0.4;
    double amplitude = 1.0;

    double operator()(double rho) const;

    static Profile gaussian(double sigma = 0.4) { return {Kind::gaussian, sigma, 1.0}; }
    static Profile flat(double edge = 0.3) { return {Kind::flat, edge, 1.0}; }
};

std::string_view to_string(Profile::Kind k);
Profile::Kind profile_kind_from_string(std::string_view s);

/// Midpoint-rule integral of the profile on the seeding grid with spacing
/// h_over_eps (in units of the profile's unit ball), centered on the origin.
double grid_integral(const Profile& f, double h_over_eps);

/// Same profile rescaled so that grid_integral(...) == 1.
Profile normalize_on_grid(Profile f, double h_over_eps);

struct BlobParams {
    Profile profile = Profile::gaussian();
    double epsilon = 0.01;
    KernelPoint x0{1.0, 0.0};
    double mu = 1.0;
    double h = 0.01 / 8.0;
    Tag tag = Tag::untagged;
};

/// w0(x) = (mu / eps^2) f((x - x0) / eps) seeded at grid cell centers.
Cloud generate_blob(const BlobParams& p);

/// Constants c1..c4 of the thin-ring hypotheses.
struct AssumptionConstants {
    double c1 = 10.0;
    double c2 = 1.0;
    double c3 = 1.0;
    double c4 = 1.0;
};

struct AssumptionReport {
    double max_xi_over_eps2 = 0.0;
    double m0_gap = 0.0;
    double m2_gap = 0.0;
    double energy_gap = 0.0;
    double a0 = 0.0;
    double energy = 0.0;
    /// (i) vorticity bound, (ii) M0, (iii) M2, (iv) energy, (v) A0 finite.
    bool pass[5] = {false, false, false, false, false};

    bool all_pass() const { return pass[0] && pass[1] && pass[2] && pass[3] && pass[4]; }
};

/// Never throws for a well-formed cloud; an empty cloud fails (ii)-(iv).
AssumptionReport validate_assumptions(const Cloud& c, const AssumptionConstants& k, const KernelConfig& kcfg);

/// Annular region of uniform vorticity around the core center.
struct PatchParams {
    double inner_radius = 0.2;
    double outer_radius = 0.6;
    double level = 0.2;       ///< vorticity value inside the patch
    double spacing = 0.04;    ///< seeding grid spacing of the patch
    double c5 = 0.3;          ///< minimum distance from the axis
    double offset_r = 0.0;    ///< annulus center relative to the core center
    double offset_z = 0.0;
};

struct DecompositionCheck {
    double sup_wd_over_r = 0.0;   ///< ||w_d / r||_inf
    double wd_l1 = 0.0;           ///< ||w_d||_1
    double bound = 0.0;           ///< |log eps|^2 / C_d * ||w_d||_1
    double patch_area = 0.0;
    double core_mass = 0.0;
    bool holds = false;
};

struct FilamentationData {
    Cloud cloud;
    DecompositionCheck decomposition;
    AssumptionReport report;
};

/// Core blob tagged core_m plus an annular patch tagged diffuse_d. Throws
/// DomainError when the decomposition inequality fails at seeding.
FilamentationData generate_filamentation_data(const BlobParams& core, const PatchParams& patch, double C_d,
                                              const AssumptionConstants& k, const KernelConfig& kcfg);

struct Normalized {
    Cloud cloud;
    double lambda = 1.0;
    double gamma = 1.0;
};

/// Rescale so that M0 = M2 = 1 (gamma = M2/M0^2, lambda^2 = M2/M0).
Normalized normalize(const Cloud& c);

/// z -> -z for every particle.
Cloud mirror_z(const Cloud& c);

/// w -> gamma w(lambda x, gamma t): positions / lambda, weights * gamma / lambda^2,
/// clock / gamma.
Cloud scale(const Cloud& c, double lambda, double gamma);

/// Rigid axial shift (diagnostics tests).
Cloud translate_z(const Cloud& c, double dz);

}  // namespace ringlab
