// globe_tsp.hpp - TSP over latent points on the unit sphere
//
// Each entity has a hidden location on the unit sphere. An instance is a
// k-subset of entities; the label is the optimal tour (adjacency matrix) over
// their chord distances. The model only sees one-hot entity ids:
//   one-hot -> MLP -> 3 coords -> unit sphere -> distance matrix -> TSP node.

#pragma once

#include "solvergrad/ops.hpp"
#include "solvergrad/solvers.hpp"
#include "solvergrad/tasks/task.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace solvergrad::tasks {

struct TspInstance {
    std::vector<std::size_t> ids;
    Vec ystar;
};

struct GlobeTspData {
    std::size_t num_entities = 0;
    std::size_t k = 0;
    std::vector<std::array<double, 3>> positions;
    std::vector<TspInstance> train, test;
};

inline Vec chord_distances(const std::vector<std::array<double, 3>>& pos, std::span<const std::size_t> ids) {
    const std::size_t k = ids.size();
    Vec d(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            double s = 0;
            for (int c = 0; c < 3; ++c) {
                const double diff = pos[ids[i]][c] - pos[ids[j]][c];
                s += diff * diff;
            }
            d[i * k + j] = d[j * k + i] = std::sqrt(s);
        }
    return d;
}

inline GlobeTspData gen_globe_tsp(std::size_t num_entities, std::size_t k, std::size_t num_train, std::size_t num_test,
                                  std::uint64_t seed) {
    if (k > kMaxTspCities) throw solver_error("globe_tsp: k exceeds the exact solver limit");
    if (k < 3 || k > 10) throw std::invalid_argument("globe_tsp: k must be in [3, 10]");
    if (num_entities < k) throw std::invalid_argument("globe_tsp: need at least k entities");
    Rng rng(seed);
    GlobeTspData data;
    data.num_entities = num_entities;
    data.k = k;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t e = 0; e < num_entities; ++e) {
        std::array<double, 3> p{};
        double r = 0;
        do {
            for (auto& v : p) v = normal(rng);
            r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        } while (r < 1e-9);
        for (auto& v : p) v /= r;
        data.positions.push_back(p);
    }
    std::vector<std::size_t> all(num_entities);
    std::iota(all.begin(), all.end(), 0);
    auto make = [&](std::size_t count, std::vector<TspInstance>& out) {
        for (std::size_t i = 0; i < count; ++i) {
            std::shuffle(all.begin(), all.end(), rng);
            TspInstance inst;
            inst.ids.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
            inst.ystar = solve_tsp(Tsp{k}, chord_distances(data.positions, inst.ids)).y;
            out.push_back(std::move(inst));
        }
    };
    make(num_train, data.train);
    make(num_test, data.test);
    return data;
}

inline json to_json(const GlobeTspData& d) {
    json j;
    j["kind"] = "globe_tsp";
    j["num_entities"] = d.num_entities;
    j["k"] = d.k;
    j["positions"] = d.positions;
    auto insts = [](const std::vector<TspInstance>& v) {
        json a = json::array();
        for (const auto& i : v) a.push_back({{"ids", i.ids}, {"ystar", i.ystar}});
        return a;
    };
    j["train"] = insts(d.train);
    j["test"] = insts(d.test);
    return j;
}

inline GlobeTspData globe_tsp_from_json(const json& j) {
    GlobeTspData d;
    d.num_entities = j.at("num_entities").get<std::size_t>();
    d.k = j.at("k").get<std::size_t>();
    d.positions = j.at("positions").get<std::vector<std::array<double, 3>>>();
    auto insts = [](const json& a) {
        std::vector<TspInstance> v;
        for (const auto& i : a) v.push_back({i.at("ids").get<std::vector<std::size_t>>(), i.at("ystar").get<Vec>()});
        return v;
    };
    d.train = insts(j.at("train"));
    d.test = insts(j.at("test"));
    return d;
}

struct GlobeTspOptions {
    std::size_t hidden = 64;
};

class GlobeTspTask final : public Task {
public:
    GlobeTspTask(GlobeTspData data, GlobeTspOptions opts = {}) : data_(std::move(data)), opts_(opts) {}

    std::string name() const override { return "globe_tsp"; }
    std::string primary_metric() const override { return "accuracy"; }

    void init_model(Rng& rng) override { mlp_ = Mlp::init({data_.num_entities, opts_.hidden, 3}, rng); }

    std::vector<Tensor*> parameters() override {
        std::vector<Tensor*> out;
        for (auto& p : mlp_.params) out.push_back(&p);
        return out;
    }

    void bind(Tape& tape, std::vector<Var>& out) override { out = mlp_.bind(tape); }

    std::size_t size(Split s) const override { return s == Split::train ? data_.train.size() : data_.test.size(); }

    ForwardResult forward(Tape& tape, std::span<const Var> params, Split split, std::size_t index,
                          const LayerHarness& layer) override {
        const TspInstance& inst = split == Split::train ? data_.train[index] : data_.test[index];
        const std::size_t k = data_.k;
        Tensor onehot = Tensor::zeros({k, data_.num_entities});
        for (std::size_t i = 0; i < k; ++i) onehot(i, inst.ids[i]) = 1.0;
        const Var x = tape.constant(std::move(onehot));
        const Var points = normalize_rows(mlp_.forward(params, x));
        const Var omega = flatten(pairwise_distance(points));
        const Var y = layer(omega, Tsp{k}, &inst.ystar);
        const Var target = tape.constant(Tensor::vector(inst.ystar));
        ForwardResult r;
        // Hamming distance between tours (L1 summed over the adjacency matrix).
        r.loss = scale(l1_loss(y, target), static_cast<double>(k * k));
        r.metrics["accuracy"] = y.value().data == inst.ystar ? 1.0 : 0.0;
        r.cost_norm = l2_norm(omega.value().data);
        return r;
    }

    // Each undirected edge flips with probability rho/k; both adjacency
    // entries change together so the label stays a symmetric matrix.
    void corrupt_labels(double rho, Rng& rng) override {
        const std::size_t k = data_.k;
        std::vector<std::size_t> upper;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j) upper.push_back(i * k + j);
        for (auto& inst : data_.train) {
            flip_entries(inst.ystar, upper, rho / static_cast<double>(k), rng);
            mirror_upper(inst.ystar, k);
        }
    }

    const GlobeTspData& data() const { return data_; }

private:
    GlobeTspData data_;
    GlobeTspOptions opts_;
    Mlp mlp_;
};

}  // namespace solvergrad::tasks
