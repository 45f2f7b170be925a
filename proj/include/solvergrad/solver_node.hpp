// solver_node.hpp - combinatorial solver as a node on the tape
//
// Forward: omega -> margin -> projection -> exact solver (default order).
// Backward: the incoming adjoint dL/dy is optionally corrupted by a hook and
// then mapped to dL/domega by the configured backward rule.

#pragma once

#include "solvergrad/estimators.hpp"
#include "solvergrad/solvers.hpp"
#include "solvergrad/tape.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace solvergrad {

struct SolverNodeOptions {
    // Ground truth for the informed margin.
    std::optional<Vec> ystar;
    // Whether the configured margin is active for this call (margin schedules).
    bool margin_active = true;
    // Perturb-and-solve sampling: the solver sees omega - eps, i.e. the node
    // returns argmax <-omega + eps, y>.
    Noise perturbation = NoNoise{};
    // Applied to dL/dy before the backward rule (gradient-noise experiments).
    std::function<void(Vec&)> adjoint_hook;
};

// Copies the strict upper triangle of a k x k layout onto the lower one.
inline void mirror_upper(Vec& v, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) v[j * k + i] = v[i * k + j];
}

inline std::size_t layout_side(const SolverSpec& spec) {
    if (const auto* t = std::get_if<Tsp>(&spec)) return t->cities;
    return 0;
}

namespace detail {

inline Vec layer_margin(const Margin& m, const SolverSpec& spec, std::span<const double> omega,
                        const SolverNodeOptions& opts, Rng& rng) {
    if (!opts.margin_active || m.kind == MarginKind::none) return Vec(omega.begin(), omega.end());
    if (m.kind == MarginKind::noise && symmetric_layout(spec)) {
        Vec xi = draw_margin_noise(m.alpha, omega.size(), rng);
        mirror_upper(xi, layout_side(spec));
        Vec out(omega.begin(), omega.end());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += xi[i];
        return out;
    }
    std::optional<std::span<const double>> ystar;
    if (opts.ystar) ystar = std::span<const double>(*opts.ystar);
    return apply_margin(m, omega, ystar, rng);
}

}  // namespace detail

// Everything the forward pass computed, kept for the backward rule and for
// telemetry.
struct SolverForward {
    Vec stored;        // cost after margin, before projection (margin_then_project)
    Vec solver_input;  // cost actually handed to the solver
    Solution solution;
};

inline SolverForward solver_forward(std::span<const double> omega, const SolverSpec& spec,
                                    const EstimatorConfig& config, Rng& rng, const SolverNodeOptions& opts = {}) {
    config.validate();
    if (omega.size() != dimension(spec)) {
        throw solver_error("solver node: cost has " + std::to_string(omega.size()) + " entries, solver expects " +
                           std::to_string(dimension(spec)));
    }
    for (double v : omega)
        if (!std::isfinite(v)) throw solver_error("solver node: non-finite cost");
    SolverForward f;
    if (config.order == LayerOrder::margin_then_project) {
        f.stored = detail::layer_margin(config.margin, spec, omega, opts, rng);
        f.solver_input = project(config.projection, f.stored);
    } else {
        f.stored.assign(omega.begin(), omega.end());
        f.solver_input = detail::layer_margin(config.margin, spec, project(config.projection, omega), opts, rng);
    }
    if (!std::holds_alternative<NoNoise>(opts.perturbation)) {
        Vec eps = draw_noise(opts.perturbation, omega.size(), rng);
        if (symmetric_layout(spec)) mirror_upper(eps, layout_side(spec));
        for (std::size_t i = 0; i < eps.size(); ++i) f.solver_input[i] -= eps[i];
    }
    f.solution = solve(spec, f.solver_input);
    return f;
}

inline Var solver_node(const Var& omega, const SolverSpec& spec, const EstimatorConfig& config, Rng& rng,
                       SolverNodeOptions opts = {}) {
    SolverForward f = solver_forward(omega.value().data, spec, config, rng, opts);
    Tensor out(omega.value().shape, f.solution.y);
    auto hook = std::move(opts.adjoint_hook);
    return omega.tape()->push(
        std::move(out), {omega},
        [omega, spec, config, f = std::move(f), hook = std::move(hook)](Tape& t, const Tensor& adj) {
            Vec g = adj.data;
            if (hook) hook(g);
            Vec grad = backward_rule(config, f.stored, f.solver_input, g, spec, f.solution.y);
            t.accumulate(omega, Tensor(omega.value().shape, std::move(grad)));
        });
}

}  // namespace solvergrad
