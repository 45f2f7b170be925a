// task.hpp - shared pieces of the synthetic training tasks

#pragma once

#include "solvergrad/estimators.hpp"
#include "solvergrad/nn.hpp"
#include "solvergrad/solver_node.hpp"
#include "solvergrad/tape.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace solvergrad::tasks {

using nlohmann::json;

struct CorruptionConfig {
    double gradient_noise_sigma = 0;  // std of Gaussian noise added to dL/dy
    double label_flip_rho = 0;        // each label entry flips with probability rho/k
    int margin_start = 0;             // margin active for epochs in [margin_start, margin_end)
    int margin_end = -1;              // -1: until the last epoch

    bool margin_active(int epoch) const {
        return epoch >= margin_start && (margin_end < 0 || epoch < margin_end);
    }
};

struct RunRecord {
    int epoch = 0;
    std::string split;
    double loss = 0;
    std::map<std::string, double> metrics;
    double cost_norm = 0;  // mean |omega| over the split's instances
    std::uint64_t seed = 0;
    bool diverged = false;
};

inline json to_json(const RunRecord& r) {
    json j;
    j["epoch"] = r.epoch;
    j["split"] = r.split;
    j["loss"] = r.loss;
    j["metrics"] = r.metrics;
    j["cost_norm"] = r.cost_norm;
    j["seed"] = r.seed;
    j["diverged"] = r.diverged;
    return j;
}

// Builds solver nodes for a task with the run's estimator, margin schedule
// and gradient corruption baked in. Evaluation uses a harness with no margin,
// no sampling noise and no corruption.
struct LayerHarness {
    EstimatorConfig config;
    bool margin_active = false;
    double gradient_noise_sigma = 0;
    Noise perturbation = NoNoise{};
    Rng* margin_rng = nullptr;
    Rng* gradient_rng = nullptr;

    Var operator()(const Var& omega, const SolverSpec& spec, const Vec* ystar = nullptr) const {
        SolverNodeOptions opts;
        opts.margin_active = margin_active;
        opts.perturbation = perturbation;
        if (ystar) opts.ystar = *ystar;
        if (gradient_noise_sigma > 0) {
            Rng* rng = gradient_rng;
            const double sigma = gradient_noise_sigma;
            const std::size_t side = layout_side(spec);
            opts.adjoint_hook = [rng, sigma, side](Vec& g) {
                std::normal_distribution<double> normal(0.0, sigma);
                Vec xi(g.size());
                for (auto& v : xi) v = normal(*rng);
                if (side) mirror_upper(xi, side);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += xi[i];
            };
        }
        return solver_node(omega, spec, config, *margin_rng, std::move(opts));
    }
};

struct ForwardResult {
    Var loss;
    std::map<std::string, double> metrics;
    double cost_norm = 0;
};

enum class Split { train, test };

class Task {
public:
    virtual ~Task() = default;

    virtual std::string name() const = 0;
    virtual std::string primary_metric() const = 0;
    // True when a larger primary metric is better.
    virtual bool metric_higher_is_better() const { return true; }

    virtual void init_model(Rng& rng) = 0;
    virtual std::vector<Tensor*> parameters() = 0;

    virtual std::size_t size(Split split) const = 0;

    // Loss and metrics of one instance. Parameters are bound on `tape`.
    virtual ForwardResult forward(Tape& tape, std::span<const Var> params, Split split, std::size_t index,
                                  const LayerHarness& layer) = 0;

    virtual void bind(Tape& tape, std::vector<Var>& out) = 0;

    // Fixed label corruption of the training split.
    virtual void corrupt_labels(double rho, Rng& rng) = 0;

    // Sampling noise used on the training forward pass, if the task samples.
    virtual Noise training_perturbation() const { return NoNoise{}; }
};

inline double l2_norm(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Flips each selected entry of y with probability p.
inline std::size_t flip_entries(Vec& y, std::span<const std::size_t> entries, double p, Rng& rng) {
    std::bernoulli_distribution coin(std::clamp(p, 0.0, 1.0));
    std::size_t flips = 0;
    for (std::size_t i : entries) {
        if (coin(rng)) {
            y[i] = 1.0 - y[i];
            ++flips;
        }
    }
    return flips;
}

}  // namespace solvergrad::tasks
