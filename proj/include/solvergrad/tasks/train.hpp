// train.hpp - training loop shared by all tasks

#pragma once

#include "solvergrad/nn.hpp"
#include "solvergrad/tasks/task.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

namespace solvergrad::tasks {

// Independent, reproducible random streams derived from one seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) { return Rng(splitmix64(seed ^ splitmix64(stream))); }

struct TrainOptions {
    EstimatorConfig estimator;
    CorruptionConfig corruption;
    OptimizerConfig optimizer;
    int epochs = 10;
    std::uint64_t seed = 0;
    // Evaluate the test split every `eval_every` epochs (and always at the end).
    int eval_every = 1;
};

using RecordSink = std::function<void(const RunRecord&)>;

namespace detail {

inline RunRecord evaluate(Task& task, Split split, const TrainOptions& opts, int epoch) {
    Rng unused = make_stream(opts.seed, 99);
    LayerHarness layer;
    layer.config = opts.estimator;
    layer.margin_active = false;
    layer.margin_rng = &unused;
    layer.gradient_rng = &unused;
    RunRecord rec;
    rec.epoch = epoch;
    rec.split = split == Split::train ? "train" : "test";
    rec.seed = opts.seed;
    const std::size_t n = task.size(split);
    for (std::size_t i = 0; i < n; ++i) {
        Tape tape;
        std::vector<Var> params;
        task.bind(tape, params);
        ForwardResult r = task.forward(tape, params, split, i, layer);
        rec.loss += r.loss.value().item();
        rec.cost_norm += r.cost_norm;
        for (const auto& [k, v] : r.metrics) rec.metrics[k] += v;
    }
    if (n) {
        rec.loss /= static_cast<double>(n);
        rec.cost_norm /= static_cast<double>(n);
        for (auto& [k, v] : rec.metrics) v /= static_cast<double>(n);
    }
    return rec;
}

}  // namespace detail

// Runs the training loop. One "train" record (running averages over the
// epoch, including margin noise) and one "test" record are emitted per epoch.
// A non-finite loss or gradient aborts the run with a record flagged
// `diverged`.
inline std::vector<RunRecord> train(Task& task, const TrainOptions& opts, const RecordSink& sink = {}) {
    opts.estimator.validate();
    Rng init_rng = make_stream(opts.seed, 1);
    Rng shuffle_rng = make_stream(opts.seed, 2);
    Rng margin_rng = make_stream(opts.seed, 3);
    Rng gradient_rng = make_stream(opts.seed, 4);
    Rng label_rng = make_stream(opts.seed, 5);

    task.init_model(init_rng);
    if (opts.corruption.label_flip_rho > 0) task.corrupt_labels(opts.corruption.label_flip_rho, label_rng);

    Optimizer optimizer(opts.optimizer);
    std::vector<RunRecord> records;
    auto emit = [&](RunRecord r) {
        if (sink) sink(r);
        records.push_back(std::move(r));
    };

    const std::size_t n = task.size(Split::train);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::max<std::size_t>(1, opts.optimizer.batch_size);

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        optimizer.set_learning_rate(opts.optimizer.rate_at(epoch));
        LayerHarness layer;
        layer.config = opts.estimator;
        layer.margin_active = opts.corruption.margin_active(epoch);
        layer.gradient_noise_sigma = opts.corruption.gradient_noise_sigma;
        layer.perturbation = task.training_perturbation();
        layer.margin_rng = &margin_rng;
        layer.gradient_rng = &gradient_rng;

        RunRecord rec;
        rec.epoch = epoch + 1;
        rec.split = "train";
        rec.seed = opts.seed;
        bool diverged = false;
        for (std::size_t start = 0; start < n && !diverged; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            Tape tape;
            std::vector<Var> params;
            task.bind(tape, params);
            std::vector<Var> losses;
            for (std::size_t b = start; b < end; ++b) {
                ForwardResult r = task.forward(tape, params, Split::train, order[b], layer);
                rec.loss += r.loss.value().item();
                rec.cost_norm += r.cost_norm;
                for (const auto& [k, v] : r.metrics) rec.metrics[k] += v;
                losses.push_back(r.loss);
            }
            Var total = losses.front();
            for (std::size_t i = 1; i < losses.size(); ++i) total = add(total, losses[i]);
            const Var root = scale(total, 1.0 / static_cast<double>(losses.size()));
            if (!std::isfinite(root.value().item())) {
                diverged = true;
                break;
            }
            tape.backward(root);
            std::vector<Tensor> grads;
            for (const auto& p : params) {
                grads.push_back(p.grad());
                for (double g : p.grad().data)
                    if (!std::isfinite(g)) diverged = true;
            }
            if (!diverged) optimizer.step(task.parameters(), grads);
        }
        if (n) {
            rec.loss /= static_cast<double>(n);
            rec.cost_norm /= static_cast<double>(n);
            for (auto& [k, v] : rec.metrics) v /= static_cast<double>(n);
        }
        rec.diverged = diverged;
        emit(rec);
        if (diverged) break;
        const bool last = epoch + 1 == opts.epochs;
        if (last || (opts.eval_every > 0 && (epoch + 1) % opts.eval_every == 0)) {
            emit(detail::evaluate(task, Split::test, opts, epoch + 1));
        }
    }
    return records;
}

}  // namespace solvergrad::tasks
