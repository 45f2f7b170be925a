// estimators.hpp - backward rules, invariance projections, margins and
// perturbation noise for argmin layers.
//
// The identity rule treats the solver as a negated identity on the backward
// pass and chains through the derivative of the cost projection:
//     dL/domega = -P'(omega)^T dL/dy.
// The blackbox rule interpolates with one extra solver call:
//     dL/domega = (y(P(omega) + lambda dL/dy) - y(P(omega))) / lambda.

#pragma once

#include "solvergrad/solvers.hpp"

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace solvergrad {

struct degenerate_cost : std::domain_error {
    using std::domain_error::domain_error;
};

inline constexpr double kDegenerateNorm = 1e-12;

using Rng = std::mt19937_64;

enum class ProjectionKind { none, mean, norm, std, plane };

struct Projection {
    ProjectionKind kind = ProjectionKind::none;
    Vec a;         // plane normal, unit length
    double b = 0;  // plane offset <a, y> = b (only used by relaxations)

    static Projection none() { return {}; }
    static Projection mean() { return {ProjectionKind::mean, {}, 0}; }
    static Projection norm() { return {ProjectionKind::norm, {}, 0}; }
    static Projection standardize() { return {ProjectionKind::std, {}, 0}; }

    static Projection plane(Vec a, double b) {
        double s = 0;
        for (double v : a) s += v * v;
        if (std::abs(std::sqrt(s) - 1.0) > 1e-12) throw std::invalid_argument("plane projection: normal is not unit");
        return {ProjectionKind::plane, std::move(a), b};
    }
};

inline std::string projection_name(ProjectionKind k) {
    switch (k) {
        case ProjectionKind::none: return "none";
        case ProjectionKind::mean: return "mean";
        case ProjectionKind::norm: return "norm";
        case ProjectionKind::std: return "std";
        case ProjectionKind::plane: return "plane";
    }
    return "none";
}

inline ProjectionKind projection_from_name(const std::string& s) {
    if (s == "none") return ProjectionKind::none;
    if (s == "mean") return ProjectionKind::mean;
    if (s == "norm") return ProjectionKind::norm;
    if (s == "std") return ProjectionKind::std;
    if (s == "plane") return ProjectionKind::plane;
    throw std::invalid_argument("unknown projection '" + s + "'");
}

enum class MarginKind { none, noise, informed };

struct Margin {
    MarginKind kind = MarginKind::none;
    double alpha = 0;
};

enum class Rule { identity, blackbox };

// Order in which the margin and the projection are applied on the forward
// pass; the default matches "perturb, then project, then solve".
enum class LayerOrder { margin_then_project, project_then_margin };

struct EstimatorConfig {
    Rule rule = Rule::identity;
    double lambda = 1.0;
    Projection projection;
    Margin margin;
    LayerOrder order = LayerOrder::margin_then_project;

    void validate() const {
        if (rule == Rule::blackbox && !(lambda > 0)) throw std::invalid_argument("blackbox rule requires lambda > 0");
        if (margin.alpha < 0) throw std::invalid_argument("margin alpha must be non-negative");
    }
};

// ---------------------------------------------------------------------------
// Projections

namespace detail {

inline double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

inline Vec mean_projected(std::span<const double> omega) {
    const double m = std::accumulate(omega.begin(), omega.end(), 0.0) / static_cast<double>(omega.size());
    Vec out(omega.begin(), omega.end());
    for (auto& v : out) v -= m;
    return out;
}

inline Vec plane_projected(std::span<const double> a, std::span<const double> omega) {
    const double s = dot(a, omega);
    Vec out(omega.begin(), omega.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= s * a[i];
    return out;
}

inline Vec normalized(std::span<const double> omega) {
    const double r = norm2(omega);
    if (!(r > kDegenerateNorm)) throw degenerate_cost("degenerate cost: norm " + std::to_string(r) + " is too small");
    Vec out(omega.begin(), omega.end());
    for (auto& v : out) v /= r;
    return out;
}

// (I/|w| - w w^T / |w|^3) g
inline Vec norm_jacobian_apply(std::span<const double> omega, std::span<const double> g) {
    const double r = norm2(omega);
    if (!(r > kDegenerateNorm)) throw degenerate_cost("degenerate cost: norm " + std::to_string(r) + " is too small");
    const double wg = dot(omega, g);
    Vec out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] / r - omega[i] * wg / (r * r * r);
    return out;
}

inline void require_same_length(std::span<const double> a, std::span<const double> b, const char* who) {
    if (a.size() != b.size()) throw std::invalid_argument(std::string(who) + ": length mismatch");
}

}  // namespace detail

inline Vec project(const Projection& p, std::span<const double> omega) {
    switch (p.kind) {
        case ProjectionKind::none: return Vec(omega.begin(), omega.end());
        case ProjectionKind::mean: return detail::mean_projected(omega);
        case ProjectionKind::norm: return detail::normalized(omega);
        case ProjectionKind::std: return detail::normalized(detail::mean_projected(omega));
        case ProjectionKind::plane:
            detail::require_same_length(p.a, omega, "plane projection");
            return detail::plane_projected(p.a, omega);
    }
    return Vec(omega.begin(), omega.end());
}

// P'(omega)^T g. All projections here have symmetric Jacobians. The std
// case is the exact chain rule: the norm Jacobian is evaluated at the
// mean-projected point, then the (linear) mean projection is applied.
inline Vec project_jacobian_apply(const Projection& p, std::span<const double> omega, std::span<const double> g) {
    detail::require_same_length(omega, g, "projection jacobian");
    switch (p.kind) {
        case ProjectionKind::none: return Vec(g.begin(), g.end());
        case ProjectionKind::mean: return detail::mean_projected(g);
        case ProjectionKind::norm: return detail::norm_jacobian_apply(omega, g);
        case ProjectionKind::std: {
            const Vec centered = detail::mean_projected(omega);
            return detail::mean_projected(detail::norm_jacobian_apply(centered, g));
        }
        case ProjectionKind::plane:
            detail::require_same_length(p.a, g, "plane projection");
            return detail::plane_projected(p.a, g);
    }
    return Vec(g.begin(), g.end());
}

// ---------------------------------------------------------------------------
// Margins

// Two-point symmetric noise, each entry +-alpha/2 with equal probability.
inline Vec draw_margin_noise(double alpha, std::size_t n, Rng& rng) {
    std::bernoulli_distribution coin(0.5);
    Vec xi(n);
    for (auto& v : xi) v = coin(rng) ? alpha / 2 : -alpha / 2;
    return xi;
}

inline Vec apply_margin(const Margin& m, std::span<const double> omega, std::optional<std::span<const double>> ystar,
                        Rng& rng) {
    Vec out(omega.begin(), omega.end());
    switch (m.kind) {
        case MarginKind::none: break;
        case MarginKind::noise: {
            const Vec xi = draw_margin_noise(m.alpha, omega.size(), rng);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += xi[i];
            break;
        }
        case MarginKind::informed: {
            if (!ystar) throw std::invalid_argument("informed margin requires the ground-truth solution");
            detail::require_same_length(*ystar, omega, "informed margin");
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double y = (*ystar)[i];
                if (y != 0.0 && y != 1.0) throw std::invalid_argument("informed margin requires a 0/1 ground truth");
                out[i] += m.alpha / 2 * y - m.alpha / 2 * (1.0 - y);
            }
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Backward rules

// omega_stored is the cost after the margin and before the projection;
// solver_input is what the solver actually saw on the forward pass (needed by
// the blackbox rule). For the default layer order solver_input = P(omega_stored).
inline Vec backward_rule(const EstimatorConfig& config, std::span<const double> omega_stored,
                         std::span<const double> solver_input, std::span<const double> g, const SolverSpec& solver,
                         std::span<const double> y_forward) {
    detail::require_same_length(omega_stored, g, "backward rule");
    if (config.rule == Rule::identity) {
        Vec out = project_jacobian_apply(config.projection, omega_stored, g);
        for (auto& v : out) v = -v;
        return out;
    }
    Vec perturbed(solver_input.begin(), solver_input.end());
    for (std::size_t i = 0; i < perturbed.size(); ++i) perturbed[i] += config.lambda * g[i];
    const Solution y_lambda = solve(solver, perturbed);
    Vec out(g.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (y_lambda.y[i] - y_forward[i]) / config.lambda;
    return out;
}

// Convenience overload for the default order: the solver input is the
// projection of the stored cost.
inline Vec backward_rule(const EstimatorConfig& config, std::span<const double> omega_stored,
                         std::span<const double> g, const SolverSpec& solver, std::span<const double> y_forward) {
    const Vec solver_input = project(config.projection, omega_stored);
    return backward_rule(config, omega_stored, solver_input, g, solver, y_forward);
}

// ---------------------------------------------------------------------------
// Perturb-and-solve sampling

struct NoNoise {};

struct Gumbel {
    double scale = 1.0;
};

// Sum-of-Gamma noise: (tau/k) (sum_{i=1..s} Gamma(1/k, k/i) - log s).
struct SumOfGamma {
    double k = 1;
    double tau = 1;
    int s = 10;
};

using Noise = std::variant<NoNoise, Gumbel, SumOfGamma>;

inline double sample_gumbel(double scale, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x;
    do {
        x = u(rng);
    } while (x <= 0.0);
    return -scale * std::log(-std::log(x));
}

inline double sample_sog(double k, double tau, int s, Rng& rng) {
    if (!(k >= 1) || s < 1 || !(tau > 0)) throw std::invalid_argument("sum-of-gamma: requires k >= 1, s >= 1, tau > 0");
    double total = 0;
    for (int i = 1; i <= s; ++i) {
        std::gamma_distribution<double> gamma(1.0 / k, k / static_cast<double>(i));
        total += gamma(rng);
    }
    return tau / k * (total - std::log(static_cast<double>(s)));
}

inline Vec draw_noise(const Noise& noise, std::size_t n, Rng& rng) {
    Vec eps(n, 0.0);
    if (const auto* g = std::get_if<Gumbel>(&noise)) {
        for (auto& v : eps) v = sample_gumbel(g->scale, rng);
    } else if (const auto* sog = std::get_if<SumOfGamma>(&noise)) {
        for (auto& v : eps) v = sample_sog(sog->k, sog->tau, sog->s, rng);
    }
    return eps;
}

// argmax_{y in Y} <omega + eps, y>, realised as solve(-(omega + eps)).
inline Solution sample_perturbed(const SolverSpec& solver, std::span<const double> omega, const Noise& noise,
                                 Rng& rng) {
    const Vec eps = draw_noise(noise, omega.size(), rng);
    Vec cost(omega.size());
    for (std::size_t i = 0; i < cost.size(); ++i) cost[i] = -(omega[i] + eps[i]);
    return solve(solver, cost);
}

}  // namespace solvergrad
