#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ringlab/cloud.hpp"
#include "ringlab/kernels.hpp"

namespace ringlab {

struct Moments {
    double m0 = 0.0;  ///< sum gamma
    double m2 = 0.0;  ///< sum r^2 gamma
};

Moments moments(const Cloud& c);

/// Discrete energy with the blob-regularized similarity variable; self pairs
/// use (r/2pi) F(delta^2 / r^2) gamma^2. Requires delta > 0.
double energy_E(const Cloud& c, const KernelConfig& kcfg, int workers = 1);

/// Truncated log-kernel energy over pairs with |x_j - x_k| <= 1 (self pairs included).
double energy_E1(const Cloud& c, const KernelConfig& kcfg, int workers = 1);

/// sum over ordered pairs with |x_j - x_k| >= R eps r0 of (1 + r_j^2) gamma_j gamma_k.
double pair_concentration(const Cloud& c, double R);

struct CenterEstimate {
    KernelPoint center;
    double leak_plain = 0.0;     ///< mass outside B(x*, rho)
    double leak_weighted = 0.0;  ///< (1 + r^2)-weighted mass outside B(x*, rho)
};

/// Discrete argmax of the in-ball mass over candidates built from the 64
/// heaviest bins of size rho/2.
CenterEstimate find_center(const Cloud& c, double rho);

/// A = sum <z - V t> r^2 gamma with t the cloud clock and <y> = sqrt(1 + y^2).
double weighted_axial_moment(const Cloud& c, double V);

double barycenter_z(const Cloud& c, TagFilter filter);
double diam_z(const Cloud& c, TagFilter filter);

/// mu |log eps| / (4 pi r0)
double kelvin_hicks_speed(double mu, double r0, double eps);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  ///< max |y - fit|
    std::size_t samples = 0;
};

/// Least-squares line through (t, y) after dropping the first trim_fraction of
/// the horizon. Needs at least 8 retained samples.
LinearFit fit_speed(std::span<const std::pair<double, double>> series, double trim_fraction = 0.1);

/// Minimum over populated z-slices of the radial extent of the selected
/// particles inside [z_lo, z_hi]. A slice is populated with >= 2 particles.
double filament_thickness(const Cloud& c, TagFilter filter, double z_lo, double z_hi, int slices);

struct DiagnosticsSettings {
    double rho = 0.0;        ///< center ball radius; 0 -> r0 sqrt(eps)
    double R = 0.0;          ///< pair-concentration ratio; 0 -> eps^{-1/2}
    TagFilter tagged = TagFilter::tagged;
    TagFilter thickness_filter = TagFilter::diffuse_d;
    int thickness_slices = 8;
    int workers = 1;
};

struct DiagnosticsRecord {
    std::int64_t step = 0;
    double t = 0.0;
    double m0 = 0.0;
    double m2 = 0.0;
    double energy_e = 0.0;
    double energy_e1 = 0.0;
    double r_star = 0.0;
    double z_star = 0.0;
    double leak_plain = 0.0;
    double leak_weighted = 0.0;
    double a_t = 0.0;
    double zbar_d = 0.0;         ///< NaN when no diffuse particles
    double diam_z_all = 0.0;
    double diam_z_tagged = 0.0;  ///< NaN when no tagged particles
    double pair_conc = 0.0;
    double v_kh = 0.0;
    double thickness_proxy = 0.0;  ///< NaN when the tail band is empty
};

DiagnosticsRecord compute_record(const Cloud& c, const KernelConfig& kcfg, const DiagnosticsSettings& s,
                                 std::int64_t step = 0);

/// Empirical constants of one run, fitted over the records after the
/// initial trim. A fit that cannot be formed (too few samples, missing
/// column) is left empty.
struct RunFits {
    double v_kh = 0.0;
    std::optional<LinearFit> speed;          ///< z*(t)
    std::optional<LinearFit> a_slope;        ///< A(t)
    std::optional<LinearFit> zbar_d;         ///< Z_d(t)
    std::optional<LinearFit> diam_z_tagged;  ///< tagged diam_z(t)
    double radial_envelope = 0.0;  ///< max |r* - r0| |log eps|
    double leak_envelope = 0.0;    ///< max leak_weighted |log eps|
    double pair_conc_max = 0.0;
    /// max / min of thickness_proxy * diam_z_tagged over the fit window
    /// (NaN when the proxy is never defined there).
    double thickness_product_ratio = 0.0;
};

RunFits compute_run_fits(std::span<const DiagnosticsRecord> recs, double eps, double r0, double trim_fraction = 0.1);

/// Fixed column order; see SCHEMA.md.
const std::vector<std::string>& diagnostics_columns();
void write_csv_header(std::ostream& os);
/// Field values in column order (step first).
std::vector<double> record_values(const DiagnosticsRecord& rec);
void write_csv_row(std::ostream& os, const DiagnosticsRecord& rec);
DiagnosticsRecord parse_csv_row(const std::string& line);

/// Read a diagnostics CSV, skipping '#' comment lines and the header row.
std::vector<DiagnosticsRecord> read_diagnostics_csv(std::istream& is);

}  // namespace ringlab
