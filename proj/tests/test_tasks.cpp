#include "oracles.hpp"

#include <solvergrad/tasks/globe_tsp.hpp>
#include <solvergrad/tasks/grid_path.hpp>
#include <solvergrad/tasks/ranking_retrieval.hpp>
#include <solvergrad/tasks/topk_explain.hpp>
#include <solvergrad/tasks/train.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace solvergrad;
using namespace solvergrad::tasks;

namespace {

// ---------------------------------------------------------------------------
// Globe TSP

TEST(GlobeTsp, TriangleLabels) {
    const auto d = gen_globe_tsp(10, 3, 50, 10, 1);
    const Vec tri{0, 1, 1, 1, 0, 1, 1, 1, 0};
    for (const auto& inst : d.train) EXPECT_EQ(inst.ystar, tri);
}

TEST(GlobeTsp, LabelsAreFeasibleAndOptimal) {
    const auto d = gen_globe_tsp(30, 5, 500, 0, 2);
    const auto Y = oracle::tours(5);
    for (const auto& inst : d.train) {
        EXPECT_TRUE(is_feasible(Tsp{5}, inst.ystar));
        const Vec dist = chord_distances(d.positions, inst.ids);
        double best = 1e300;
        for (const auto& y : Y) best = std::min(best, oracle::tour_length(y, dist));
        EXPECT_NEAR(oracle::tour_length(inst.ystar, dist), best, 1e-12);
        EXPECT_EQ(solve_tsp(Tsp{5}, dist).y, inst.ystar);
    }
}

TEST(GlobeTsp, PositionsOnUnitSphereAndDeterministic) {
    const auto a = gen_globe_tsp(30, 5, 20, 20, 3);
    const auto b = gen_globe_tsp(30, 5, 20, 20, 3);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    for (const auto& p : a.positions) EXPECT_NEAR(p[0] * p[0] + p[1] * p[1] + p[2] * p[2], 1.0, 1e-12);
    EXPECT_NE(to_json(gen_globe_tsp(30, 5, 20, 20, 4)).dump(), to_json(a).dump());
    EXPECT_EQ(to_json(globe_tsp_from_json(to_json(a))).dump(), to_json(a).dump());
}

TEST(GlobeTsp, RejectsTooManyCities) {
    EXPECT_THROW(gen_globe_tsp(30, 16, 1, 1, 0), solver_error);
    EXPECT_THROW(gen_globe_tsp(30, 2, 1, 1, 0), std::invalid_argument);
    EXPECT_THROW(gen_globe_tsp(4, 5, 1, 1, 0), std::invalid_argument);
}

TEST(Corruption, LabelFlipRateMatchesRhoOverK) {
    const std::size_t k = 5;
    GlobeTspTask task(gen_globe_tsp(30, k, 4000, 0, 5));
    const auto before = task.data().train;
    Rng rng(6);
    const double rho = 1.0;
    task.corrupt_labels(rho, rng);
    std::size_t flips = 0, entries = 0;
    for (std::size_t n = 0; n < before.size(); ++n) {
        const Vec& y = task.data().train[n].ystar;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                EXPECT_EQ(y[i * k + j], y[j * k + i]);
                if (j > i) {
                    flips += y[i * k + j] != before[n].ystar[i * k + j];
                    ++entries;
                }
            }
    }
    const double p = rho / k;
    const double se = std::sqrt(p * (1 - p) / entries);
    EXPECT_LE(std::abs(static_cast<double>(flips) / entries - p), 3 * se);
}

TEST(Corruption, GridFlipRate) {
    GridPathTask task(gen_grid_path(6, 6, 4, 2000, 0, 7));
    const auto before = task.data().train;
    Rng rng(8);
    task.corrupt_labels(1.5, rng);
    std::size_t flips = 0, entries = 0;
    for (std::size_t n = 0; n < before.size(); ++n)
        for (std::size_t i = 0; i < 36; ++i, ++entries) flips += task.data().train[n].ystar[i] != before[n].ystar[i];
    const double p = 1.5 / 6;
    EXPECT_LE(std::abs(static_cast<double>(flips) / entries - p), 3 * std::sqrt(p * (1 - p) / entries));
}

TEST(Corruption, GradientNoiseOnlyTouchesSolverAdjoint) {
    std::mt19937_64 src(9);
    const Vec w0 = oracle::gaussian(6, src), c = oracle::gaussian(6, src);
    auto grad = [&](double sigma, Rng& grng) {
        Rng mrng(0);
        LayerHarness layer;
        layer.gradient_noise_sigma = sigma;
        layer.margin_rng = &mrng;
        layer.gradient_rng = &grng;
        Tape t;
        const Var w = t.variable(Tensor::vector(w0));
        const Var y = layer(w, TopK{6, 2});
        t.backward(sum(mul(y, t.constant(Tensor::vector(c)))));
        return w.grad().data;
    };
    Rng g0(1), g1(1), copy(1);
    const Vec clean = grad(0.0, g0);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(clean[i], -c[i]);
    const Vec noisy = grad(0.3, g1);
    std::normal_distribution<double> normal(0.0, 0.3);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(noisy[i], -(c[i] + normal(copy)));
}

// ---------------------------------------------------------------------------
// Grid paths

TEST(GridPathData, RatioOfTruePathIsOneAndOthersAreNotBelow) {
    const auto d = gen_grid_path(8, 8, 5, 50, 0, 10);
    std::mt19937_64 rng(11);
    for (const auto& inst : d.train) {
        EXPECT_TRUE(is_feasible(GridPath{8, 8, 8}, inst.ystar));
        EXPECT_EQ(cost_ratio(inst.wstar, inst.ystar, inst.ystar), 1.0);
        Vec noisy = inst.wstar;
        for (auto& v : noisy) v = std::max(0.01, v + oracle::gaussian(1, rng)[0]);
        const Vec y = solve_grid_path({8, 8, 8}, noisy).y;
        EXPECT_GE(cost_ratio(inst.wstar, y, inst.ystar), 1.0);
    }
}

TEST(GridPathData, HandComputedRatio) {
    const auto d = gen_grid_path(8, 8, 5, 1, 0, 12);
    const auto& inst = d.train.front();
    // Top row then right column.
    Vec border(64, 0.0);
    double border_cost = 0, true_cost = 0;
    for (std::size_t c = 0; c < 8; ++c) border[c] = 1;
    for (std::size_t r = 1; r < 8; ++r) border[r * 8 + 7] = 1;
    for (std::size_t i = 0; i < 64; ++i) {
        if (border[i]) border_cost += d.class_costs[inst.classes[i]];
        if (inst.ystar[i]) true_cost += d.class_costs[inst.classes[i]];
    }
    EXPECT_TRUE(is_feasible(GridPath{8, 8, 8}, border));
    EXPECT_DOUBLE_EQ(cost_ratio(inst.wstar, border, inst.ystar), border_cost / true_cost);
    EXPECT_GE(border_cost / true_cost, 1.0);
}

TEST(GridPathData, SizeLimit) {
    EXPECT_THROW(gen_grid_path(17, 16, 3, 1, 1, 0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Top-k explanation

TEST(TopkExplain, TrueMaskAndTargets) {
    const auto d = gen_topk_explain(10, 3, 100, 0, 13);
    ASSERT_EQ(d.relevant.size(), 3u);
    Vec mask(10, 0.0);
    for (std::size_t i : d.relevant) mask[i] = 1.0;
    EXPECT_EQ(precision_at_k(mask, d.relevant), 1.0);
    for (const auto& inst : d.train) {
        double s = 0;
        for (std::size_t i = 0; i < 10; ++i) s += mask[i] * inst.x[i];
        EXPECT_NEAR(inst.target, s / 3.0, 1e-15);
    }
    EXPECT_THROW(gen_topk_explain(5, 5, 1, 1, 0), std::invalid_argument);
    EXPECT_THROW(gen_topk_explain(5, 0, 1, 1, 0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Recall

TEST(Recall, AtKExamples) {
    const Vec w{0.9, 0.2, 0.8, 0.1}, y{0, 0, 1, 0};
    EXPECT_EQ(recall_at_k(w, y, 1), 0.0);
    EXPECT_EQ(recall_at_k(w, y, 2), 1.0);
    EXPECT_EQ(recall_at_k(w, Vec{1, 0, 0, 0}, 1), 1.0);
    EXPECT_EQ(recall_at_k(w, Vec{0, 0, 0, 1}, 4), 1.0);
    EXPECT_THROW(recall_at_k(w, Vec{0, 0, 0, 0}, 1), std::invalid_argument);
}

TEST(Recall, LossExamples) {
    EXPECT_EQ(recall_loss(Vec{0.9, 0.8, 0.1}, Vec{1, 1, 0}), 0.0);
    const double want = std::log(1 + std::log(2.0));
    EXPECT_NEAR(want, 0.5266, 1e-4);
    EXPECT_DOUBLE_EQ(recall_loss(Vec{0.9, 0.2, 0.8, 0.1}, Vec{0, 0, 1, 0}), want);
    EXPECT_THROW(recall_loss(Vec{1, 2}, Vec{0, 0}), std::invalid_argument);
}

TEST(Recall, LossIsNonNegativeAndMatchesTape) {
    std::mt19937_64 rng(14);
    Rng unused(0);
    LayerHarness layer;
    layer.margin_rng = &unused;
    layer.gradient_rng = &unused;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng() % 7;
        const Vec w = oracle::gaussian(n, rng);
        Vec y(n, 0.0);
        y[rng() % n] = 1;
        for (auto& v : y)
            if (rng() % 3 == 0) v = 1;
        const double plain = recall_loss(w, y);
        EXPECT_GE(plain, 0.0);
        Tape tape;
        EXPECT_NEAR(recall_loss(tape.variable(Tensor::vector(w)), y, layer).value().item(), plain, 1e-15);
    }
}

TEST(RankingRetrievalData, EveryGalleryHasAPositive) {
    const auto d = gen_ranking_retrieval(6, 10, 8, 15);
    for (const auto* split : {&d.train, &d.test})
        for (const auto& q : split->queries) {
            EXPECT_GE(std::count(q.relevance.begin(), q.relevance.end(), 1.0), 1);
            for (std::size_t i = 0; i < q.gallery.size(); ++i)
                EXPECT_EQ(q.relevance[i], split->labels[q.gallery[i]] == split->labels[q.query] ? 1.0 : 0.0);
        }
}

// ---------------------------------------------------------------------------
// Training loop

TrainOptions small_tsp_options() {
    TrainOptions o;
    o.estimator.projection = Projection::standardize();
    o.optimizer.batch_size = 10;
    o.epochs = 3;
    o.seed = 4;
    return o;
}

TEST(Train, ZeroLearningRateKeepsMetricsConstant) {
    GlobeTspTask task(gen_globe_tsp(12, 5, 30, 20, 1));
    TrainOptions o = small_tsp_options();
    o.optimizer.learning_rate = 0.0;
    const auto recs = train(task, o);
    std::vector<RunRecord> test;
    for (const auto& r : recs)
        if (r.split == "test") test.push_back(r);
    ASSERT_EQ(test.size(), 3u);
    for (const auto& r : test) {
        EXPECT_EQ(r.metrics, test.front().metrics);
        EXPECT_EQ(r.loss, test.front().loss);
        EXPECT_EQ(r.cost_norm, test.front().cost_norm);
    }
}

TEST(Train, FixedSeedIsBitIdentical) {
    auto run = [] {
        GlobeTspTask task(gen_globe_tsp(12, 5, 30, 20, 1));
        TrainOptions o = small_tsp_options();
        o.estimator.margin = {MarginKind::noise, 0.1};
        o.corruption.gradient_noise_sigma = 0.2;
        std::string out;
        train(task, o, [&](const RunRecord& r) { out += to_json(r).dump() + "\n"; });
        return out;
    };
    const std::string a = run();
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, run());
}

TEST(Train, EmitsTrainAndTestRecordsPerEpoch) {
    GridPathTask task(gen_grid_path(4, 4, 3, 20, 10, 2));
    TrainOptions o;
    o.epochs = 4;
    o.eval_every = 2;
    o.optimizer.batch_size = 5;
    const auto recs = train(task, o);
    int trains = 0, tests = 0;
    for (const auto& r : recs) {
        trains += r.split == "train";
        tests += r.split == "test";
        EXPECT_GT(r.cost_norm, 0.0);
        EXPECT_TRUE(r.metrics.count("cost_ratio"));
    }
    EXPECT_EQ(trains, 4);
    EXPECT_EQ(tests, 2);
}

TEST(Train, LearningRateSchedule) {
    OptimizerConfig c;
    c.learning_rate = 1e-3;
    c.decay_epochs = {75};
    EXPECT_DOUBLE_EQ(c.rate_at(74), 1e-3);
    EXPECT_DOUBLE_EQ(c.rate_at(75), 1e-4);
}

TEST(Train, MarginSchedule) {
    CorruptionConfig c;
    c.margin_start = 0;
    c.margin_end = 50;
    EXPECT_TRUE(c.margin_active(0));
    EXPECT_TRUE(c.margin_active(49));
    EXPECT_FALSE(c.margin_active(50));
}

// A task whose loss overflows after the first step.
class ExplodingTask final : public Task {
public:
    std::string name() const override { return "exploding"; }
    std::string primary_metric() const override { return "m"; }
    void init_model(Rng&) override { w_ = Tensor::vector({1.0}); }
    std::vector<Tensor*> parameters() override { return {&w_}; }
    std::size_t size(Split) const override { return 4; }
    void bind(Tape& tape, std::vector<Var>& out) override { out = {tape.variable(w_)}; }
    ForwardResult forward(Tape&, std::span<const Var> params, Split, std::size_t, const LayerHarness&) override {
        ForwardResult r;
        // exp(w^2) overflows once the first update overshoots.
        r.loss = sum(exp(square(params[0])));
        r.metrics["m"] = 0;
        return r;
    }
    void corrupt_labels(double, Rng&) override {}

private:
    Tensor w_;
};

TEST(Train, DivergenceIsFlagged) {
    ExplodingTask task;
    TrainOptions o;
    o.optimizer.kind = OptimizerKind::sgd;
    o.optimizer.learning_rate = 10.0;
    o.optimizer.batch_size = 2;
    o.epochs = 5;
    const auto recs = train(task, o);
    ASSERT_FALSE(recs.empty());
    EXPECT_TRUE(recs.back().diverged);
    EXPECT_EQ(recs.back().split, "train");
    EXPECT_LT(recs.size(), 10u);
}

}  // namespace
