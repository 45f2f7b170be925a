// grid_path.hpp - shortest paths on grids of terrain classes
//
// Every cell belongs to one of a few terrain classes with a fixed positive
// cost. The model sees a noisy class embedding per cell and predicts the
// cell cost with a shared per-cell MLP; the label is the optimal path.

#pragma once

#include "solvergrad/ops.hpp"
#include "solvergrad/solvers.hpp"
#include "solvergrad/tasks/task.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace solvergrad::tasks {

struct GridInstance {
    std::vector<std::size_t> classes;  // row-major, one per cell
    Vec features;                      // [cells, embed_dim], row-major
    Vec wstar;                         // true cell costs
    Vec ystar;
};

struct GridPathData {
    std::size_t height = 0, width = 0, num_classes = 0, embed_dim = 0;
    int connectivity = 8;
    Vec class_costs;
    std::vector<Vec> embeddings;
    std::vector<GridInstance> train, test;
};

struct GridGenOptions {
    std::size_t embed_dim = 8;
    double feature_noise = 0.3;
    int connectivity = 8;
};

inline GridPathData gen_grid_path(std::size_t height, std::size_t width, std::size_t num_classes,
                                  std::size_t num_train, std::size_t num_test, std::uint64_t seed,
                                  GridGenOptions opts = {}) {
    if (height == 0 || width == 0 || height * width > 256)
        throw std::invalid_argument("grid_path: need 1 <= height*width <= 256");
    if (num_classes < 1) throw std::invalid_argument("grid_path: need at least one class");
    Rng rng(seed);
    GridPathData d;
    d.height = height;
    d.width = width;
    d.num_classes = num_classes;
    d.embed_dim = opts.embed_dim;
    d.connectivity = opts.connectivity;
    // Costs spread over [1, 10], shuffled so class order carries no meaning.
    for (std::size_t c = 0; c < num_classes; ++c)
        d.class_costs.push_back(num_classes == 1 ? 1.0 : 1.0 + 9.0 * static_cast<double>(c) / (num_classes - 1.0));
    std::shuffle(d.class_costs.begin(), d.class_costs.end(), rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
        Vec e(opts.embed_dim);
        for (auto& v : e) v = normal(rng);
        d.embeddings.push_back(std::move(e));
    }
    std::uniform_int_distribution<std::size_t> pick(0, num_classes - 1);
    const std::size_t cells = height * width;
    auto make = [&](std::size_t count, std::vector<GridInstance>& out) {
        for (std::size_t i = 0; i < count; ++i) {
            GridInstance inst;
            for (std::size_t c = 0; c < cells; ++c) {
                const std::size_t cls = pick(rng);
                inst.classes.push_back(cls);
                inst.wstar.push_back(d.class_costs[cls]);
                for (double v : d.embeddings[cls]) inst.features.push_back(v + opts.feature_noise * normal(rng));
            }
            inst.ystar = solve_grid_path(GridPath{height, width, opts.connectivity}, inst.wstar).y;
            out.push_back(std::move(inst));
        }
    };
    make(num_train, d.train);
    make(num_test, d.test);
    return d;
}

// <w*, y> / <w*, y*>
inline double cost_ratio(std::span<const double> wstar, std::span<const double> y, std::span<const double> ystar) {
    return dot(wstar, y) / dot(wstar, ystar);
}

inline json to_json(const GridPathData& d) {
    json j;
    j["kind"] = "grid_path";
    j["height"] = d.height;
    j["width"] = d.width;
    j["num_classes"] = d.num_classes;
    j["embed_dim"] = d.embed_dim;
    j["connectivity"] = d.connectivity;
    j["class_costs"] = d.class_costs;
    j["embeddings"] = d.embeddings;
    auto insts = [](const std::vector<GridInstance>& v) {
        json a = json::array();
        for (const auto& i : v)
            a.push_back({{"classes", i.classes}, {"features", i.features}, {"wstar", i.wstar}, {"ystar", i.ystar}});
        return a;
    };
    j["train"] = insts(d.train);
    j["test"] = insts(d.test);
    return j;
}

struct GridPathOptions {
    std::size_t hidden = 32;
    double min_cost = 1e-3;  // keeps predicted costs strictly positive
};

class GridPathTask final : public Task {
public:
    GridPathTask(GridPathData data, GridPathOptions opts = {}) : data_(std::move(data)), opts_(opts) {}

    std::string name() const override { return "grid_path"; }
    std::string primary_metric() const override { return "cost_ratio"; }
    bool metric_higher_is_better() const override { return false; }

    void init_model(Rng& rng) override { mlp_ = Mlp::init({data_.embed_dim, opts_.hidden, 1}, rng); }

    std::vector<Tensor*> parameters() override {
        std::vector<Tensor*> out;
        for (auto& p : mlp_.params) out.push_back(&p);
        return out;
    }

    void bind(Tape& tape, std::vector<Var>& out) override { out = mlp_.bind(tape); }

    std::size_t size(Split s) const override { return s == Split::train ? data_.train.size() : data_.test.size(); }

    ForwardResult forward(Tape& tape, std::span<const Var> params, Split split, std::size_t index,
                          const LayerHarness& layer) override {
        const GridInstance& inst = split == Split::train ? data_.train[index] : data_.test[index];
        const std::size_t cells = data_.height * data_.width;
        const Var x = tape.constant(Tensor::matrix(cells, data_.embed_dim, inst.features));
        const Var omega = add_scalar(softplus(flatten(mlp_.forward(params, x))), opts_.min_cost);
        const Var y = layer(omega, GridPath{data_.height, data_.width, data_.connectivity}, &inst.ystar);
        const Var target = tape.constant(Tensor::vector(inst.ystar));
        ForwardResult r;
        // Hamming distance between the predicted and the true path.
        r.loss = scale(l1_loss(y, target), static_cast<double>(cells));
        r.metrics["cost_ratio"] = cost_ratio(inst.wstar, y.value().data, inst.ystar);
        r.metrics["exact"] = y.value().data == inst.ystar ? 1.0 : 0.0;
        r.cost_norm = l2_norm(omega.value().data);
        return r;
    }

    // Each cell label flips with probability rho/k, k = max(height, width).
    void corrupt_labels(double rho, Rng& rng) override {
        std::vector<std::size_t> all(data_.height * data_.width);
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        const double k = static_cast<double>(std::max(data_.height, data_.width));
        for (auto& inst : data_.train) flip_entries(inst.ystar, all, rho / k, rng);
    }

    const GridPathData& data() const { return data_; }

private:
    GridPathData data_;
    GridPathOptions opts_;
    Mlp mlp_;
};

}  // namespace solvergrad::tasks
