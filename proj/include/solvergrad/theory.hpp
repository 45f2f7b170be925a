// theory.hpp - executable checks of the identity update's convergence
// guarantee and of the relaxation view of projections.
//
// Update dynamics: with a fixed incoming adjoint g, the identity update moves
// the cost along the ray w(alpha) = omega0 + alpha g. The solution along the
// ray is the lower envelope of the lines <omega0, y> + alpha <g, y>, which
// gives exact breakpoints and the step bound alpha_max = |I_2|.

#pragma once

#include "solvergrad/estimators.hpp"
#include "solvergrad/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace solvergrad::theory {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// {y in Y : <y - y0, g> < 0}, i.e. solutions with lower linearised loss.
inline std::vector<Vec> better_set(const std::vector<Vec>& Y, std::span<const double> y0, std::span<const double> g) {
    const bool member = std::any_of(Y.begin(), Y.end(), [&](const Vec& y) {
        return std::equal(y.begin(), y.end(), y0.begin(), y0.end());
    });
    if (!member) throw std::invalid_argument("better_set: y0 is not an element of Y");
    const double base = dot(y0, g);
    std::vector<Vec> out;
    for (const auto& y : Y) {
        if (dot(y, g) - base < 0) out.push_back(y);
    }
    return out;
}

struct DynamicsInstance {
    std::vector<Vec> Y;
    Vec omega0;
    Vec g;
    double alpha = 0.1;
    std::size_t max_steps = 10000;
};

struct DynamicsVerdict {
    bool reached_better = false;
    std::size_t steps = 0;  // switch step n, or max_steps when the solution stayed
    Vec solution;           // y(omega_n), or y(omega0) when it stayed
    std::vector<Vec> better;
    double alpha_max = kInfinity;
};

// Breakpoints of the solution along w(alpha) = omega0 + alpha g, together with
// the index (into Y) of the solution on each constancy interval. Interval i
// is [breaks[i-1], breaks[i]) with breaks[-1] = 0.
struct RayPartition {
    std::vector<double> breaks;
    std::vector<std::size_t> pieces;
};

inline RayPartition ray_partition(const std::vector<Vec>& Y, std::span<const double> omega0,
                                  std::span<const double> g) {
    if (Y.empty()) throw std::invalid_argument("ray_partition: empty Y");
    std::vector<double> c(Y.size()), s(Y.size());
    for (std::size_t i = 0; i < Y.size(); ++i) {
        c[i] = dot(omega0, Y[i]);
        s[i] = dot(g, Y[i]);
    }
    const Solution start = solve_explicit(ExplicitSet{Y}, omega0);
    std::size_t cur = static_cast<std::size_t>(
        std::find(Y.begin(), Y.end(), start.y) - Y.begin());
    RayPartition part;
    part.pieces.push_back(cur);
    double at = 0;
    for (;;) {
        std::optional<std::size_t> next;
        double next_at = kInfinity;
        for (std::size_t i = 0; i < Y.size(); ++i) {
            if (!(s[i] < s[cur])) continue;
            const double cross = std::max(at, (c[i] - c[cur]) / (s[cur] - s[i]));
            if (cross < next_at || (cross == next_at && next && s[i] < s[*next])) {
                next_at = cross;
                next = i;
            }
        }
        if (!next) break;
        part.breaks.push_back(next_at);
        part.pieces.push_back(*next);
        at = next_at;
        cur = *next;
    }
    return part;
}

// Length of the second constancy interval along the ray (infinite when the
// solution changes at most once).
inline double compute_alpha_max(const std::vector<Vec>& Y, std::span<const double> omega0,
                                std::span<const double> g) {
    const RayPartition part = ray_partition(Y, omega0, g);
    if (part.breaks.size() < 2) return kInfinity;
    return part.breaks[1] - part.breaks[0];
}

// Iterates omega_{k+1} = omega_k + alpha g (the identity update with fixed
// adjoint g), resolving ties in favour of the previous solution, until the
// solution first changes or max_steps is reached.
inline DynamicsVerdict run_dynamics(const DynamicsInstance& inst) {
    if (!(inst.alpha > 0)) throw std::invalid_argument("run_dynamics: alpha must be positive");
    const ExplicitSet set{inst.Y};
    DynamicsVerdict v;
    Vec omega = inst.omega0;
    const Vec y0 = solve_explicit(set, omega).y;
    v.better = better_set(inst.Y, y0, inst.g);
    v.alpha_max = compute_alpha_max(inst.Y, inst.omega0, inst.g);
    Vec prev = y0;
    for (std::size_t k = 1; k <= inst.max_steps; ++k) {
        for (std::size_t i = 0; i < omega.size(); ++i) omega[i] += inst.alpha * inst.g[i];
        Vec y = solve_explicit(set, omega, std::span<const double>(prev)).y;
        if (y != y0) {
            v.reached_better = true;
            v.steps = k;
            v.solution = std::move(y);
            return v;
        }
        prev = std::move(y);
    }
    v.steps = inst.max_steps;
    v.solution = y0;
    return v;
}

// Keeps only members that are the unique strict minimiser for at least one of
// the probed directions. A kept vector is certainly a vertex of conv(Y); a
// vertex with a very thin normal cone may be dropped, which only shrinks Y.
inline std::vector<Vec> extremal_filter(const std::vector<Vec>& Y, Rng& rng, std::size_t directions = 4000) {
    if (Y.empty()) return {};
    const std::size_t n = Y.front().size();
    std::vector<char> keep(Y.size(), 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec c(n);
    for (std::size_t d = 0; d < directions; ++d) {
        for (auto& v : c) v = normal(rng);
        double best = kInfinity, second = kInfinity;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < Y.size(); ++i) {
            const double val = dot(c, Y[i]);
            if (val < best) {
                second = best;
                best = val;
                arg = i;
            } else if (val < second) {
                second = val;
            }
        }
        if (second - best > 1e-9) keep[arg] = 1;
    }
    std::vector<Vec> out;
    for (std::size_t i = 0; i < Y.size(); ++i)
        if (keep[i]) out.push_back(Y[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Relaxations: argmin over a smooth superset of Y with optional quadratic
// regulariser, in closed form.

struct FullSpace {
    double eps = 1.0;
};

struct Hyperplane {
    Vec a;
    double b = 0;
    double eps = 1.0;
};

struct Sphere {
    Vec c;
    double r = 1.0;
};

struct SphereCapPlane {
    Vec c;
    double r = 1.0;
    Vec a;
};

using RelaxationSpec = std::variant<FullSpace, Hyperplane, Sphere, SphereCapPlane>;

// The binary hypercube {0,1}^n lies on the sphere centred at (1/2) 1 with
// radius sqrt(n)/2.
inline Sphere hypercube_sphere(std::size_t n) {
    return {Vec(n, 0.5), std::sqrt(static_cast<double>(n)) / 2.0};
}

// Permutations of (1..n) lie on the sphere centred at ((n+1)/2) 1 with radius
// sqrt(n (n^2 - 1) / 12).
inline Sphere permutahedron_sphere(std::size_t n) {
    const double nd = static_cast<double>(n);
    return {Vec(n, (nd + 1.0) / 2.0), std::sqrt(nd * (nd * nd - 1.0) / 12.0)};
}

// Permutahedron intersected with its hyperplane <1/sqrt(n), y> = const.
inline SphereCapPlane permutahedron_cap(std::size_t n) {
    const Sphere s = permutahedron_sphere(n);
    return {s.c, s.r, Vec(n, 1.0 / std::sqrt(static_cast<double>(n)))};
}

inline Vec relaxed_argmin(const RelaxationSpec& spec, std::span<const double> omega) {
    struct V {
        std::span<const double> omega;
        Vec operator()(const FullSpace& s) const {
            if (!(s.eps > 0)) throw std::invalid_argument("full-space relaxation requires eps > 0");
            Vec out(omega.begin(), omega.end());
            for (auto& v : out) v = -v / s.eps;
            return out;
        }
        Vec operator()(const Hyperplane& s) const {
            if (!(s.eps > 0)) throw std::invalid_argument("hyperplane relaxation requires eps > 0");
            Vec out = detail::plane_projected(s.a, omega);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i] / s.eps + s.b * s.a[i];
            return out;
        }
        Vec operator()(const Sphere& s) const {
            const Vec u = detail::normalized(omega);
            Vec out(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) out[i] = s.c[i] - s.r * u[i];
            return out;
        }
        Vec operator()(const SphereCapPlane& s) const {
            const Vec u = detail::normalized(detail::plane_projected(s.a, omega));
            Vec out(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) out[i] = s.c[i] - s.r * u[i];
            return out;
        }
    };
    return std::visit(V{omega}, spec);
}

// The identity-estimator map each relaxation corresponds to, applied to g:
// full-space -I/eps, hyperplane -P_plane/eps, sphere -r P_norm'(omega),
// sphere-cap-plane -r (P_norm o P_plane)'(omega).
inline Vec relaxation_identity_map(const RelaxationSpec& spec, std::span<const double> omega,
                                   std::span<const double> g) {
    struct V {
        std::span<const double> omega, g;
        Vec operator()(const FullSpace& s) const {
            Vec out(g.begin(), g.end());
            for (auto& v : out) v = -v / s.eps;
            return out;
        }
        Vec operator()(const Hyperplane& s) const {
            Vec out = project_jacobian_apply(Projection{ProjectionKind::plane, s.a, s.b}, omega, g);
            for (auto& v : out) v = -v / s.eps;
            return out;
        }
        Vec operator()(const Sphere& s) const {
            Vec out = project_jacobian_apply(Projection::norm(), omega, g);
            for (auto& v : out) v = -s.r * v;
            return out;
        }
        Vec operator()(const SphereCapPlane& s) const {
            const Vec at = detail::plane_projected(s.a, omega);
            Vec out = detail::plane_projected(s.a, project_jacobian_apply(Projection::norm(), at, g));
            for (auto& v : out) v = -s.r * v;
            return out;
        }
    };
    return std::visit(V{omega, g}, spec);
}

struct JacobianReport {
    bool passed = false;
    double max_deviation = 0;  // max |J_fd - J_expected| / max |J_expected|
};

// Central finite differences of relaxed_argmin against the identity map.
inline JacobianReport check_relaxation_jacobians(const RelaxationSpec& spec, std::span<const double> omega,
                                                 double tolerance = 1e-5, double step = 1e-6) {
    const std::size_t n = omega.size();
    double worst = 0, scale = 0;
    std::vector<Vec> fd(n), expected(n);
    Vec e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        Vec plus(omega.begin(), omega.end()), minus(omega.begin(), omega.end());
        plus[j] += step;
        minus[j] -= step;
        const Vec fp = relaxed_argmin(spec, plus), fm = relaxed_argmin(spec, minus);
        fd[j].resize(n);
        for (std::size_t i = 0; i < n; ++i) fd[j][i] = (fp[i] - fm[i]) / (2 * step);
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        // Symmetric maps: column j equals the map applied to e_j.
        expected[j] = relaxation_identity_map(spec, omega, e);
        for (double v : expected[j]) scale = std::max(scale, std::abs(v));
    }
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(fd[j][i] - expected[j][i]));
    JacobianReport rep;
    rep.max_deviation = worst / std::max(scale, 1e-300);
    rep.passed = rep.max_deviation <= tolerance;
    return rep;
}

}  // namespace solvergrad::theory
