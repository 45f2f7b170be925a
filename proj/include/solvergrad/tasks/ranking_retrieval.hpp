// ranking_retrieval.hpp - metric learning with rank-based recall losses
//
// Items are noisy draws around class centres. Each query ranks a small
// gallery by embedding similarity; items of the query's class are relevant.
// Training uses the loglog recall loss built from two ranking solver nodes.

#pragma once

#include "solvergrad/ops.hpp"
#include "solvergrad/solvers.hpp"
#include "solvergrad/tasks/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace solvergrad::tasks {

namespace detail {

inline std::vector<std::size_t> relevant_indices(std::span<const double> ystar) {
    std::vector<std::size_t> rel;
    for (std::size_t i = 0; i < ystar.size(); ++i) {
        if (ystar[i] != 0.0 && ystar[i] != 1.0) throw std::invalid_argument("recall: relevance must be 0/1");
        if (ystar[i] == 1.0) rel.push_back(i);
    }
    if (rel.empty()) throw std::invalid_argument("recall: at least one relevant element is required");
    return rel;
}

}  // namespace detail

// 1 iff some relevant item is ranked within the top K.
inline double recall_at_k(std::span<const double> omega, std::span<const double> ystar, std::size_t K) {
    if (omega.size() != ystar.size()) throw std::invalid_argument("recall_at_k: length mismatch");
    const auto rel = detail::relevant_indices(ystar);
    const Vec rank = solve_ranking(omega).y;
    for (std::size_t i : rel)
        if (rank[i] <= static_cast<double>(K)) return 1.0;
    return 0.0;
}

// mean over relevant i of log(1 + log(1 + rank_i - rank+_i)), where rank+
// ranks i among the relevant items only.
inline double recall_loss(std::span<const double> omega, std::span<const double> ystar) {
    if (omega.size() != ystar.size()) throw std::invalid_argument("recall_loss: length mismatch");
    const auto rel = detail::relevant_indices(ystar);
    const Vec rank = solve_ranking(omega).y;
    Vec rel_scores;
    for (std::size_t i : rel) rel_scores.push_back(omega[i]);
    const Vec rank_plus = solve_ranking(rel_scores).y;
    double total = 0;
    for (std::size_t j = 0; j < rel.size(); ++j) total += std::log1p(std::log1p(rank[rel[j]] - rank_plus[j]));
    return total / static_cast<double>(rel.size());
}

// Tape version: both rankings are solver nodes built by `layer`.
inline Var recall_loss(const Var& omega, std::span<const double> ystar, const LayerHarness& layer) {
    const auto rel = detail::relevant_indices(ystar);
    const Var rank = layer(omega, Ranking{omega.size()});
    // A single relevant item always has within-relevant rank 1.
    const Var rank_plus = rel.size() == 1 ? omega.tape()->constant(Tensor::vector({1.0}))
                                          : layer(gather(omega, rel), Ranking{rel.size()});
    const Var gap = sub(gather(rank, rel), rank_plus);
    return mean(log(add_scalar(log(add_scalar(gap, 1.0)), 1.0)));
}

struct RetrievalQuery {
    std::size_t query = 0;
    std::vector<std::size_t> gallery;
    Vec relevance;
};

struct RetrievalSplit {
    std::vector<Vec> features;
    std::vector<std::size_t> labels;
    std::vector<RetrievalQuery> queries;
};

struct RankingRetrievalData {
    std::size_t num_classes = 0, raw_dim = 0, embed_dim = 0;
    RetrievalSplit train, test;
};

struct RetrievalGenOptions {
    std::size_t raw_dim = 16;
    double feature_noise = 1.0;
    std::size_t gallery_size = 12;
};

inline RankingRetrievalData gen_ranking_retrieval(std::size_t num_classes, std::size_t per_class,
                                                  std::size_t embed_dim, std::uint64_t seed,
                                                  RetrievalGenOptions opts = {}) {
    if (num_classes < 2 || per_class < 2) throw std::invalid_argument("ranking_retrieval: need >= 2 classes and >= 2 per class");
    if (embed_dim < 1) throw std::invalid_argument("ranking_retrieval: embed_dim must be positive");
    const std::size_t total = num_classes * per_class;
    if (opts.gallery_size < 1 || opts.gallery_size >= total)
        throw std::invalid_argument("ranking_retrieval: gallery_size must be in [1, items)");
    Rng rng(seed);
    RankingRetrievalData d;
    d.num_classes = num_classes;
    d.raw_dim = opts.raw_dim;
    d.embed_dim = embed_dim;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vec> centres(num_classes, Vec(opts.raw_dim));
    for (auto& c : centres)
        for (auto& v : c) v = normal(rng);
    auto make = [&](RetrievalSplit& s) {
        for (std::size_t c = 0; c < num_classes; ++c)
            for (std::size_t i = 0; i < per_class; ++i) {
                Vec f = centres[c];
                for (auto& v : f) v += opts.feature_noise * normal(rng);
                s.features.push_back(std::move(f));
                s.labels.push_back(c);
            }
        for (std::size_t q = 0; q < total; ++q) {
            std::vector<std::size_t> others, positives;
            for (std::size_t j = 0; j < total; ++j) {
                if (j == q) continue;
                others.push_back(j);
                if (s.labels[j] == s.labels[q]) positives.push_back(j);
            }
            std::shuffle(others.begin(), others.end(), rng);
            RetrievalQuery rq;
            rq.query = q;
            rq.gallery.assign(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(opts.gallery_size));
            const bool has_positive = std::any_of(rq.gallery.begin(), rq.gallery.end(),
                                                  [&](std::size_t j) { return s.labels[j] == s.labels[q]; });
            if (!has_positive) {
                std::uniform_int_distribution<std::size_t> pick(0, positives.size() - 1);
                std::uniform_int_distribution<std::size_t> slot(0, rq.gallery.size() - 1);
                rq.gallery[slot(rng)] = positives[pick(rng)];
            }
            for (std::size_t j : rq.gallery) rq.relevance.push_back(s.labels[j] == s.labels[q] ? 1.0 : 0.0);
            s.queries.push_back(std::move(rq));
        }
    };
    make(d.train);
    make(d.test);
    return d;
}

inline json to_json(const RankingRetrievalData& d) {
    auto split = [](const RetrievalSplit& s) {
        json q = json::array();
        for (const auto& r : s.queries) q.push_back({{"query", r.query}, {"gallery", r.gallery}, {"relevance", r.relevance}});
        return json{{"features", s.features}, {"labels", s.labels}, {"queries", q}};
    };
    return {{"kind", "ranking_retrieval"},
            {"num_classes", d.num_classes},
            {"raw_dim", d.raw_dim},
            {"embed_dim", d.embed_dim},
            {"train", split(d.train)},
            {"test", split(d.test)}};
}

struct RankingRetrievalOptions {
    std::size_t hidden = 32;
};

class RankingRetrievalTask final : public Task {
public:
    RankingRetrievalTask(RankingRetrievalData data, RankingRetrievalOptions opts = {})
        : data_(std::move(data)), opts_(opts) {}

    std::string name() const override { return "ranking_retrieval"; }
    std::string primary_metric() const override { return "recall_at_1"; }

    void init_model(Rng& rng) override { mlp_ = Mlp::init({data_.raw_dim, opts_.hidden, data_.embed_dim}, rng); }

    std::vector<Tensor*> parameters() override {
        std::vector<Tensor*> out;
        for (auto& p : mlp_.params) out.push_back(&p);
        return out;
    }

    void bind(Tape& tape, std::vector<Var>& out) override { out = mlp_.bind(tape); }

    std::size_t size(Split s) const override { return split(s).queries.size(); }

    ForwardResult forward(Tape& tape, std::span<const Var> params, Split which, std::size_t index,
                          const LayerHarness& layer) override {
        const RetrievalSplit& s = split(which);
        const RetrievalQuery& q = s.queries[index];
        const std::size_t m = q.gallery.size();
        Tensor x = Tensor::zeros({m + 1, data_.raw_dim});
        auto put = [&](std::size_t row, std::size_t item) {
            std::copy(s.features[item].begin(), s.features[item].end(), x.data.begin() + row * data_.raw_dim);
        };
        put(0, q.query);
        for (std::size_t j = 0; j < m; ++j) put(j + 1, q.gallery[j]);
        const Var emb = normalize_rows(mlp_.forward(params, tape.constant(std::move(x))));
        std::vector<std::size_t> rows(m);
        std::iota(rows.begin(), rows.end(), 1);
        const Var query = reshape(gather_rows(emb, {0}), {data_.embed_dim, 1});
        const Var scores = flatten(matmul(gather_rows(emb, rows), query));
        ForwardResult r;
        r.loss = recall_loss(scores, q.relevance, layer);
        r.metrics["recall_at_1"] = recall_at_k(scores.value().data, q.relevance, 1);
        r.cost_norm = l2_norm(scores.value().data);
        return r;
    }

    void corrupt_labels(double, Rng&) override {
        throw std::invalid_argument("ranking_retrieval: label flips are not defined for class relevance");
    }

    const RankingRetrievalData& data() const { return data_; }

private:
    const RetrievalSplit& split(Split s) const { return s == Split::train ? data_.train : data_.test; }

    RankingRetrievalData data_;
    RankingRetrievalOptions opts_;
    Mlp mlp_;
};

}  // namespace solvergrad::tasks
