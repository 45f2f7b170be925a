// topk_explain.hpp - pick k features that explain a target
//
// A hidden subset S of k out of n features determines the target (the mean of
// x over S). The model scores features, the top-k solver turns scores into a
// mask, and a linear decoder reads the masked input. Precision@k measures
// how much of S the mask recovers.

#pragma once

#include "solvergrad/ops.hpp"
#include "solvergrad/solvers.hpp"
#include "solvergrad/tasks/task.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace solvergrad::tasks {

struct TopkInstance {
    Vec x;
    double target = 0;
};

struct TopkExplainData {
    std::size_t n = 0, k = 0;
    std::vector<std::size_t> relevant;  // sorted
    std::vector<TopkInstance> train, test;
};

inline double subset_mean(std::span<const double> x, std::span<const std::size_t> subset) {
    double s = 0;
    for (std::size_t i : subset) s += x[i];
    return s / static_cast<double>(subset.size());
}

inline TopkExplainData gen_topk_explain(std::size_t n, std::size_t k, std::size_t num_train, std::size_t num_test,
                                        std::uint64_t seed) {
    if (k < 1 || k >= n) throw std::invalid_argument("topk_explain: need 1 <= k < n");
    Rng rng(seed);
    TopkExplainData d;
    d.n = n;
    d.k = k;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    d.relevant.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(d.relevant.begin(), d.relevant.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    auto make = [&](std::size_t count, std::vector<TopkInstance>& out) {
        for (std::size_t i = 0; i < count; ++i) {
            TopkInstance inst;
            inst.x.resize(n);
            for (auto& v : inst.x) v = normal(rng);
            inst.target = subset_mean(inst.x, d.relevant);
            out.push_back(std::move(inst));
        }
    };
    make(num_train, d.train);
    make(num_test, d.test);
    return d;
}

inline double precision_at_k(std::span<const double> mask, std::span<const std::size_t> relevant) {
    double hit = 0;
    for (std::size_t i : relevant) hit += mask[i];
    return hit / static_cast<double>(relevant.size());
}

inline json to_json(const TopkExplainData& d) {
    json j;
    j["kind"] = "topk_explain";
    j["n"] = d.n;
    j["k"] = d.k;
    j["relevant"] = d.relevant;
    auto insts = [](const std::vector<TopkInstance>& v) {
        json a = json::array();
        for (const auto& i : v) a.push_back({{"x", i.x}, {"target", i.target}});
        return a;
    };
    j["train"] = insts(d.train);
    j["test"] = insts(d.test);
    return j;
}

struct TopkExplainOptions {
    std::size_t hidden = 32;
    Noise perturbation = NoNoise{};  // e.g. SumOfGamma for sampled masks
};

class TopkExplainTask final : public Task {
public:
    TopkExplainTask(TopkExplainData data, TopkExplainOptions opts = {}) : data_(std::move(data)), opts_(opts) {}

    std::string name() const override { return "topk_explain"; }
    std::string primary_metric() const override { return "precision"; }

    void init_model(Rng& rng) override {
        scorer_ = Mlp::init({data_.n, opts_.hidden, data_.n}, rng);
        decoder_ = Mlp::init({data_.n, 1}, rng);
    }

    std::vector<Tensor*> parameters() override {
        std::vector<Tensor*> out;
        for (auto& p : scorer_.params) out.push_back(&p);
        for (auto& p : decoder_.params) out.push_back(&p);
        return out;
    }

    void bind(Tape& tape, std::vector<Var>& out) override {
        out = scorer_.bind(tape);
        for (auto& v : decoder_.bind(tape)) out.push_back(v);
    }

    std::size_t size(Split s) const override { return s == Split::train ? data_.train.size() : data_.test.size(); }

    Noise training_perturbation() const override { return opts_.perturbation; }

    ForwardResult forward(Tape& tape, std::span<const Var> params, Split split, std::size_t index,
                          const LayerHarness& layer) override {
        const TopkInstance& inst = split == Split::train ? data_.train[index] : data_.test[index];
        const std::size_t scorer_params = scorer_.params.size();
        const Var x = tape.constant(Tensor::matrix(1, data_.n, inst.x));
        const Var theta = flatten(scorer_.forward(params.first(scorer_params), x));
        // The solver keeps the k smallest costs, so cost = -score.
        const Var omega = scale(theta, -1.0);
        const Var mask = layer(omega, TopK{data_.n, data_.k});
        const Var masked = reshape(mul(mask, flatten(x)), {1, data_.n});
        const Var pred = flatten(decoder_.forward(params.subspan(scorer_params), masked));
        ForwardResult r;
        r.loss = l2_loss(pred, tape.constant(Tensor::vector({inst.target})));
        r.metrics["precision"] = precision_at_k(mask.value().data, data_.relevant);
        r.cost_norm = l2_norm(omega.value().data);
        return r;
    }

    void corrupt_labels(double, Rng&) override {
        throw std::invalid_argument("topk_explain: labels are real-valued targets, label flips do not apply");
    }

    const TopkExplainData& data() const { return data_; }

private:
    TopkExplainData data_;
    TopkExplainOptions opts_;
    Mlp scorer_, decoder_;
};

}  // namespace solvergrad::tasks
