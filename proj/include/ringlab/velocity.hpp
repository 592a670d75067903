#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ringlab/cloud.hpp"
#include "ringlab/kernels.hpp"

namespace ringlab {

struct VelocitySample {
    double u_r = 0.0;
    double u_z = 0.0;
};

/// u(x) = sum_j K_delta(x, x_j) gamma_j at arbitrary targets, summed in
/// particle order. A target bitwise equal to a source position is that
/// particle (its term is skipped); a second coincident source with
/// delta = 0 raises SingularityError. Targets with r < r_min are rejected.
std::vector<VelocitySample> velocity_direct(const Cloud& c, std::span<const KernelPoint> targets,
                                            const KernelConfig& cfg, int workers = 1);

/// Velocity of every particle, self term excluded by index. Bitwise equal to
/// velocity_direct at the particle positions (same per-target order).
std::vector<VelocitySample> velocity_at_particles(const Cloud& c, const KernelConfig& cfg, int workers = 1);

/// Near-axis guard: r_min = 1e-6 r0.
double axis_guard(const Cloud& c);

/// Spatial bisection tree over (r, z). Nodes are stored flat; node 0 is the root.
struct TreeNode {
    double r_lo = 0.0, r_hi = 0.0, z_lo = 0.0, z_hi = 0.0;  ///< tight bounding box
    std::array<std::int32_t, 2> child{-1, -1};
    double gamma = 0.0;                                     ///< aggregate circulation
    double r_c = 0.0, z_c = 0.0;                            ///< gamma-weighted centroid
    std::size_t begin = 0, end = 0;                         ///< range in Tree::order

    bool leaf() const { return child[0] < 0; }
    std::size_t count() const { return end - begin; }
    double diameter() const;
};

struct Tree {
    std::vector<TreeNode> nodes;
    std::vector<std::size_t> order;  ///< particle indices, leaves own contiguous ranges
    std::size_t leaf_capacity = 32;
    int degree = 0;  ///< far-field interpolation degree per axis (0 = monopole)
    /// Interpolation proxies per node: (degree+1)^2 points and weights, empty
    /// for monopole trees or nodes too small to benefit.
    std::vector<std::vector<KernelPoint>> proxy_points;
    std::vector<std::vector<double>> proxy_weights;

    const TreeNode& root() const { return nodes.front(); }
};

struct TreeConfig {
    std::size_t leaf_capacity = 32;
    /// Chebyshev interpolation degree of the far-field cluster approximation.
    /// 0 reproduces the monopole (aggregate gamma at the centroid).
    int degree = 0;
};

/// Balanced bisection (median split of the longer box side). Root gamma is a
/// compensated sum. Throws EmptySelectionError on an empty cloud.
Tree build_tree(const Cloud& c, const TreeConfig& tc = {});

/// Barnes-Hut style evaluation: a node with diameter / distance <= theta is
/// replaced by its cluster approximation; leaves are summed directly.
std::vector<VelocitySample> velocity_treecode(const Cloud& c, const Tree& tree, std::span<const KernelPoint> targets,
                                              double theta, const KernelConfig& cfg, int workers = 1);

/// Same at particle positions with self exclusion by index.
std::vector<VelocitySample> velocity_treecode_at_particles(const Cloud& c, const Tree& tree, double theta,
                                                           const KernelConfig& cfg, int workers = 1);

/// Evaluation path used by the integrator for every RK stage.
struct VelocityPath {
    enum class Kind { direct, treecode };
    Kind kind = Kind::direct;
    double theta = 0.5;
    TreeConfig tree{};
    int workers = 1;
};

std::vector<VelocitySample> particle_velocities(const Cloud& c, const KernelConfig& cfg, const VelocityPath& path);

}  // namespace ringlab
