#include "ringlab/velocity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "ringlab/errors.hpp"
#include "ringlab/parallel.hpp"
#include "ringlab/summation.hpp"

namespace ringlab {

namespace {

void check_sources(const Cloud& c) {
    for (const auto& p : c.particles) {
        if (!(p.r > 0.0)) throw DomainError("velocity: source particle with r <= 0");
    }
}

void check_targets(const Cloud& c, std::span<const KernelPoint> targets) {
    const double r_min = axis_guard(c);
    for (const auto& x : targets) {
        if (!(x.r >= r_min)) throw DomainError("velocity: target closer to the axis than r_min");
    }
}

// One source term; shared by all direct loops.
inline void add_term(VelocitySample& u, const KernelPoint& x, const Particle& src, double delta_sq,
                     const KernelConfig& cfg) {
    const double s2 = detail::similarity_sq(x.r, x.z, src.r, src.z, delta_sq);
    if (s2 == 0.0) throw SingularityError("velocity: coincident particles with delta = 0");
    const KernelValue k = detail::kernel_from(x.r, x.z, src.r, src.z, eval_F1F2_unchecked(std::sqrt(s2), cfg));
    u.u_r += k.k_r * src.gamma;
    u.u_z += k.k_z * src.gamma;
}

// Sum over an index range of sources for one target, skipping `self`.
// `coincident_skipped` tracks the first bitwise-coincident source when the
// target is not tied to a particle index.
inline void sum_range(VelocitySample& u, const KernelPoint& x, const Cloud& c, const std::size_t* idx,
                      std::size_t count, std::size_t self, bool by_coincidence, bool& coincident_skipped,
                      double delta_sq, const KernelConfig& cfg) {
    for (std::size_t m = 0; m < count; ++m) {
        const std::size_t k = idx ? idx[m] : m;
        if (k == self) continue;
        const Particle& src = c.particles[k];
        if (by_coincidence && src.r == x.r && src.z == x.z) {
            if (!coincident_skipped) {
                coincident_skipped = true;
                continue;
            }
            if (delta_sq == 0.0) throw SingularityError("velocity: target coincides with two sources at delta = 0");
        }
        add_term(u, x, src, delta_sq, cfg);
    }
}

constexpr std::size_t kNoSelf = static_cast<std::size_t>(-1);

}  // namespace

double axis_guard(const Cloud& c) { return 1e-6 * c.r0; }

std::vector<VelocitySample> velocity_direct(const Cloud& c, std::span<const KernelPoint> targets,
                                            const KernelConfig& cfg, int workers) {
    check_sources(c);
    check_targets(c, targets);
    const double delta_sq = cfg.delta * cfg.delta;
    std::vector<VelocitySample> out(targets.size());
    parallel_for(targets.size(), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            bool skipped = false;
            sum_range(out[i], targets[i], c, nullptr, c.size(), kNoSelf, true, skipped, delta_sq, cfg);
        }
    });
    return out;
}

std::vector<VelocitySample> velocity_at_particles(const Cloud& c, const KernelConfig& cfg, int workers) {
    check_sources(c);
    const std::vector<KernelPoint> pos = c.positions();
    check_targets(c, pos);
    const double delta_sq = cfg.delta * cfg.delta;
    const std::size_t n = c.size();
    std::vector<VelocitySample> out(n);

    if (workers > 1) {
        parallel_for(n, workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                bool skipped = false;
                sum_range(out[i], pos[i], c, nullptr, n, i, false, skipped, delta_sq, cfg);
            }
        });
        return out;
    }

    // Serial: each pair is evaluated once. Target k receives sources
    // 0..k-1 in earlier outer iterations and k+1.. in its own, so every
    // per-target sum runs in ascending source order like the one-sided loop.
    for (std::size_t j = 0; j < n; ++j) {
        const Particle& pj = c.particles[j];
        for (std::size_t k = j + 1; k < n; ++k) {
            const Particle& pk = c.particles[k];
            const double s2 = detail::similarity_sq(pj.r, pj.z, pk.r, pk.z, delta_sq);
            if (s2 == 0.0) throw SingularityError("velocity: coincident particles with delta = 0");
            const F1F2 f = eval_F1F2_unchecked(std::sqrt(s2), cfg);
            const double q = std::sqrt(pj.r * pk.r);
            const KernelValue kjk = detail::kernel_from_q(pj.r, pj.z, pk.r, pk.z, q, f);
            const KernelValue kkj = detail::kernel_from_q(pk.r, pk.z, pj.r, pj.z, q, f);
            out[j].u_r += kjk.k_r * pk.gamma;
            out[j].u_z += kjk.k_z * pk.gamma;
            out[k].u_r += kkj.k_r * pj.gamma;
            out[k].u_z += kkj.k_z * pj.gamma;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tree

double TreeNode::diameter() const { return std::hypot(r_hi - r_lo, z_hi - z_lo); }

namespace {

// Chebyshev points of the second kind on [lo, hi]; a single point for a
// degenerate interval.
std::vector<double> cheb_points(double lo, double hi, int degree) {
    if (hi <= lo || degree == 0) return {0.5 * (lo + hi)};
    std::vector<double> t(degree + 1);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (int k = 0; k <= degree; ++k) t[k] = mid + half * std::cos(std::numbers::pi * k / degree);
    return t;
}

// Barycentric Lagrange basis values at y.
void lagrange_basis(const std::vector<double>& t, double y, std::vector<double>& out) {
    const std::size_t n = t.size();
    out.assign(n, 0.0);
    if (n == 1) {
        out[0] = 1.0;
        return;
    }
    double denom = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double diff = y - t[k];
        if (diff == 0.0) {
            std::fill(out.begin(), out.end(), 0.0);
            out[k] = 1.0;
            return;
        }
        double w = (k % 2 == 0) ? 1.0 : -1.0;
        if (k == 0 || k + 1 == n) w *= 0.5;
        out[k] = w / diff;
        denom += out[k];
    }
    for (auto& v : out) v /= denom;
}

struct Builder {
    const Cloud& c;
    Tree& tree;

    std::int32_t build(std::size_t begin, std::size_t end) {
        const auto id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        TreeNode node;
        node.begin = begin;
        node.end = end;
        node.r_lo = node.z_lo = std::numeric_limits<double>::infinity();
        node.r_hi = node.z_hi = -std::numeric_limits<double>::infinity();
        CompensatedSum g, gr, gz;
        for (std::size_t m = begin; m < end; ++m) {
            const Particle& p = c.particles[tree.order[m]];
            node.r_lo = std::min(node.r_lo, p.r);
            node.r_hi = std::max(node.r_hi, p.r);
            node.z_lo = std::min(node.z_lo, p.z);
            node.z_hi = std::max(node.z_hi, p.z);
            g.add(p.gamma);
            gr.add(p.gamma * p.r);
            gz.add(p.gamma * p.z);
        }
        node.gamma = g.value();
        if (node.gamma > 0.0) {
            node.r_c = gr.value() / node.gamma;
            node.z_c = gz.value() / node.gamma;
        } else {
            node.r_c = 0.5 * (node.r_lo + node.r_hi);
            node.z_c = 0.5 * (node.z_lo + node.z_hi);
        }

        if (end - begin > tree.leaf_capacity) {
            const bool split_r = (node.r_hi - node.r_lo) >= (node.z_hi - node.z_lo);
            const std::size_t mid = begin + (end - begin) / 2;
            auto key_less = [&](std::size_t a, std::size_t b) {
                const Particle& pa = c.particles[a];
                const Particle& pb = c.particles[b];
                const double ka = split_r ? pa.r : pa.z;
                const double kb = split_r ? pb.r : pb.z;
                return ka < kb || (ka == kb && a < b);
            };
            std::nth_element(tree.order.begin() + static_cast<std::ptrdiff_t>(begin),
                             tree.order.begin() + static_cast<std::ptrdiff_t>(mid),
                             tree.order.begin() + static_cast<std::ptrdiff_t>(end), key_less);
            const std::int32_t left = build(begin, mid);
            const std::int32_t right = build(mid, end);
            node.child = {left, right};
        }
        tree.nodes[static_cast<std::size_t>(id)] = node;
        return id;
    }
};

void build_proxies(const Cloud& c, Tree& tree) {
    const int deg = tree.degree;
    const std::size_t n_proxy = static_cast<std::size_t>((deg + 1) * (deg + 1));
    tree.proxy_points.assign(tree.nodes.size(), {});
    tree.proxy_weights.assign(tree.nodes.size(), {});
    std::vector<double> lr, lz;
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        const TreeNode& node = tree.nodes[id];
        if (node.leaf() || node.count() <= n_proxy) continue;
        const auto tr = cheb_points(node.r_lo, node.r_hi, deg);
        const auto tz = cheb_points(node.z_lo, node.z_hi, deg);
        auto& pts = tree.proxy_points[id];
        auto& wts = tree.proxy_weights[id];
        pts.reserve(tr.size() * tz.size());
        for (double r : tr)
            for (double z : tz) pts.push_back({r, z});
        wts.assign(pts.size(), 0.0);
        for (std::size_t m = node.begin; m < node.end; ++m) {
            const Particle& p = c.particles[tree.order[m]];
            lagrange_basis(tr, p.r, lr);
            lagrange_basis(tz, p.z, lz);
            for (std::size_t a = 0; a < tr.size(); ++a) {
                const double wa = lr[a] * p.gamma;
                for (std::size_t b = 0; b < tz.size(); ++b) wts[a * tz.size() + b] += wa * lz[b];
            }
        }
    }
}

struct TreeEval {
    const Cloud& c;
    const Tree& tree;
    double theta;
    double delta_sq;
    const KernelConfig& cfg;

    void visit(std::int32_t id, const KernelPoint& x, std::size_t self, bool by_coincidence, bool& skipped,
               VelocitySample& u) const {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        if (node.leaf()) {
            sum_range(u, x, c, tree.order.data() + node.begin, node.count(), self, by_coincidence, skipped, delta_sq,
                      cfg);
            return;
        }
        const double dr = x.r - 0.5 * (node.r_lo + node.r_hi);
        const double dz = x.z - 0.5 * (node.z_lo + node.z_hi);
        const double dist = std::sqrt(dr * dr + dz * dz);
        const auto& pts = tree.proxy_points[static_cast<std::size_t>(id)];
        // Nodes too small for proxies are cheaper to sum exactly.
        const bool approximable = tree.degree == 0 || !pts.empty();
        if (approximable && node.diameter() <= theta * dist) {
            if (tree.degree == 0) {
                const Particle mono{node.r_c, node.z_c, node.gamma, 0.0, Tag::untagged};
                add_term(u, x, mono, delta_sq, cfg);
            } else {
                const auto& wts = tree.proxy_weights[static_cast<std::size_t>(id)];
                for (std::size_t k = 0; k < pts.size(); ++k) {
                    const Particle proxy{pts[k].r, pts[k].z, wts[k], 0.0, Tag::untagged};
                    add_term(u, x, proxy, delta_sq, cfg);
                }
            }
            return;
        }
        visit(node.child[0], x, self, by_coincidence, skipped, u);
        visit(node.child[1], x, self, by_coincidence, skipped, u);
    }
};

}  // namespace

Tree build_tree(const Cloud& c, const TreeConfig& tc) {
    if (c.empty()) throw EmptySelectionError("build_tree: empty cloud");
    Tree tree;
    tree.leaf_capacity = std::max<std::size_t>(1, tc.leaf_capacity);
    tree.degree = std::max(0, tc.degree);
    tree.order.resize(c.size());
    std::iota(tree.order.begin(), tree.order.end(), std::size_t{0});
    tree.nodes.reserve(2 * c.size() / tree.leaf_capacity + 2);
    Builder{c, tree}.build(0, c.size());
    build_proxies(c, tree);
    return tree;
}

std::vector<VelocitySample> velocity_treecode(const Cloud& c, const Tree& tree, std::span<const KernelPoint> targets,
                                              double theta, const KernelConfig& cfg, int workers) {
    if (!(theta >= 0.0 && theta < 1.0)) throw DomainError("velocity_treecode: theta must be in [0, 1)");
    check_sources(c);
    check_targets(c, targets);
    const TreeEval ev{c, tree, theta, cfg.delta * cfg.delta, cfg};
    std::vector<VelocitySample> out(targets.size());
    parallel_for(targets.size(), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            bool skipped = false;
            ev.visit(0, targets[i], kNoSelf, true, skipped, out[i]);
        }
    });
    return out;
}

std::vector<VelocitySample> velocity_treecode_at_particles(const Cloud& c, const Tree& tree, double theta,
                                                           const KernelConfig& cfg, int workers) {
    if (!(theta >= 0.0 && theta < 1.0)) throw DomainError("velocity_treecode: theta must be in [0, 1)");
    check_sources(c);
    const std::vector<KernelPoint> pos = c.positions();
    check_targets(c, pos);
    const TreeEval ev{c, tree, theta, cfg.delta * cfg.delta, cfg};
    std::vector<VelocitySample> out(pos.size());
    parallel_for(pos.size(), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            bool skipped = false;
            ev.visit(0, pos[i], i, false, skipped, out[i]);
        }
    });
    return out;
}

std::vector<VelocitySample> particle_velocities(const Cloud& c, const KernelConfig& cfg, const VelocityPath& path) {
    if (path.kind == VelocityPath::Kind::treecode) {
        const Tree tree = build_tree(c, path.tree);
        return velocity_treecode_at_particles(c, tree, path.theta, cfg, path.workers);
    }
    return velocity_at_particles(c, cfg, path.workers);
}

}  // namespace ringlab
