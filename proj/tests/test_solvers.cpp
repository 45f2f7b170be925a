#include "oracles.hpp"

#include <solvergrad/instance_io.hpp>
#include <solvergrad/solvers.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace solvergrad;

namespace {

const std::vector<Vec> kE12{{1, 0}, {0, 1}};

TEST(Explicit, PicksSmallerCost) {
    EXPECT_EQ(solve_explicit({kE12}, Vec{0.2, 0.8}).y, (Vec{1, 0}));
}

TEST(Explicit, TieGoesToLexicographicallySmallest) {
    EXPECT_EQ(solve_explicit({kE12}, Vec{0.5, 0.5}).y, (Vec{0, 1}));
    EXPECT_EQ(solve_explicit({{{0, 1}, {1, 0}}}, Vec{0.5, 0.5}).y, (Vec{0, 1}));
}

TEST(Explicit, PreviousSolutionWinsTies) {
    const Vec prev0{0, 1}, prev1{1, 0};
    EXPECT_EQ(solve_explicit({kE12}, Vec{0.5, 0.5}, std::span<const double>(prev0)).y, prev0);
    EXPECT_EQ(solve_explicit({kE12}, Vec{0.5, 0.5}, std::span<const double>(prev1)).y, prev1);
    // Not a tie: previous is ignored.
    EXPECT_EQ(solve_explicit({kE12}, Vec{0.2, 0.8}, std::span<const double>(prev0)).y, prev1);
}

TEST(Explicit, EmptySetRejected) {
    EXPECT_THROW(solve_explicit({}, Vec{}), solver_error);
    EXPECT_THROW(validate(ExplicitSet{{{1, 0}, {1, 0}}}), solver_error);
}

TEST(TopK, SmallestEntries) {
    EXPECT_EQ(solve_topk({3, 2}, Vec{0.5, -0.2, 0.9}).y, (Vec{1, 1, 0}));
    EXPECT_EQ(solve_topk({3, 1}, Vec{1, 1, 0}).y, (Vec{0, 0, 1}));
}

TEST(TopK, TiesGoToSmallerIndex) {
    EXPECT_EQ(solve_topk({4, 2}, Vec{1, 0, 1, 1}).y, (Vec{1, 1, 0, 0}));
}

TEST(TopK, KOutOfRangeRejected) {
    EXPECT_THROW(solve_topk({3, 0}, Vec{1, 2, 3}), solver_error);
    EXPECT_THROW(solve_topk({3, 4}, Vec{1, 2, 3}), solver_error);
}

TEST(TopK, MatchesSubsetEnumeration) {
    std::mt19937_64 rng(1);
    const auto Y = oracle::k_subsets(6, 3);
    for (int t = 0; t < 200; ++t) {
        const Vec w = oracle::gaussian(6, rng);
        const Solution s = solve_topk({6, 3}, w);
        EXPECT_EQ(s.y, oracle::argmin(Y, w));
        EXPECT_EQ(s.objective, oracle::min_value(Y, w));
    }
}

TEST(Ranking, HandExample) {
    const Solution s = solve_ranking(Vec{0.3, 0.1, 0.2});
    EXPECT_EQ(s.y, (Vec{1, 3, 2}));
    EXPECT_DOUBLE_EQ(s.objective, 1.0);
    std::vector<Vec> perms;
    Vec p{1, 2, 3};
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    for (const auto& q : perms) EXPECT_LE(s.objective, oracle::inner(Vec{0.3, 0.1, 0.2}, q));
}

TEST(Ranking, DescendingInputGivesIdentityRanks) {
    EXPECT_EQ(solve_ranking(Vec{5, 3, 1, -2}).y, (Vec{1, 2, 3, 4}));
}

TEST(Ranking, TiesGiveSmallerIndexTheBetterRank) {
    EXPECT_EQ(solve_ranking(Vec{0.5, 0.5, 0.7}).y, (Vec{2, 3, 1}));
}

TEST(Ranking, MatchesSortOracleAndEnumeration) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        const Vec w = oracle::gaussian(5, rng);
        const Solution s = solve_ranking(w);
        EXPECT_EQ(s.y, oracle::ranks_desc(w));
        Vec p{1, 2, 3, 4, 5};
        double best = 1e300;
        do best = std::min(best, oracle::inner(w, p));
        while (std::next_permutation(p.begin(), p.end()));
        EXPECT_NEAR(s.objective, best, 1e-12);
    }
}

TEST(GridPath, EightConnected) {
    const Solution s = solve_grid_path({2, 2, 8}, Vec{1, 10, 1, 1});
    EXPECT_EQ(s.y, (Vec{1, 0, 0, 1}));
    EXPECT_DOUBLE_EQ(s.objective, 2.0);
}

TEST(GridPath, FourConnected) {
    const Solution s = solve_grid_path({2, 2, 4}, Vec{1, 10, 1, 1});
    EXPECT_EQ(s.y, (Vec{1, 0, 1, 1}));
    EXPECT_DOUBLE_EQ(s.objective, 3.0);
}

TEST(GridPath, SingleCell) {
    EXPECT_EQ(solve_grid_path({1, 1, 8}, Vec{0.3}).y, (Vec{1}));
}

TEST(GridPath, RejectsNonPositiveCosts) {
    EXPECT_THROW(solve_grid_path({2, 2, 8}, Vec{1, 0, 1, 1}), solver_error);
    EXPECT_THROW(solve_grid_path({2, 2, 8}, Vec{1, -1, 1, 1}), solver_error);
    EXPECT_THROW(solve_grid_path({2, 2, 8}, Vec{1, std::nan(""), 1, 1}), solver_error);
}

// Simple-path enumeration on a small grid.
void grid_paths(std::size_t h, std::size_t w, int conn, std::size_t at, Vec& on, std::vector<Vec>& out) {
    on[at] = 1;
    if (at == h * w - 1) {
        out.push_back(on);
    } else {
        const long r = static_cast<long>(at / w), c = static_cast<long>(at % w);
        for (long dr = -1; dr <= 1; ++dr)
            for (long dc = -1; dc <= 1; ++dc) {
                if ((dr == 0 && dc == 0) || (conn == 4 && dr != 0 && dc != 0)) continue;
                const long nr = r + dr, nc = c + dc;
                if (nr < 0 || nc < 0 || nr >= static_cast<long>(h) || nc >= static_cast<long>(w)) continue;
                const std::size_t nxt = static_cast<std::size_t>(nr) * w + static_cast<std::size_t>(nc);
                if (!on[nxt]) grid_paths(h, w, conn, nxt, on, out);
            }
    }
    on[at] = 0;
}

TEST(GridPath, MatchesPathEnumeration) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int conn : {4, 8}) {
        std::vector<Vec> paths;
        Vec on(9, 0.0);
        grid_paths(3, 3, conn, 0, on, paths);
        for (int t = 0; t < 50; ++t) {
            Vec w(9);
            for (auto& v : w) v = u(rng);
            const Solution s = solve_grid_path({3, 3, conn}, w);
            EXPECT_NEAR(s.objective, oracle::min_value(paths, w), 1e-12);
            EXPECT_TRUE(is_feasible(GridPath{3, 3, conn}, s.y));
        }
    }
}

TEST(Tsp, FourCityExample) {
    const std::size_t k = 4;
    Vec d(16, 0.0);
    auto set = [&](std::size_t i, std::size_t j, double v) { d[i * k + j] = d[j * k + i] = v; };
    set(0, 1, 1), set(0, 2, 2), set(0, 3, 4), set(1, 2, 1), set(1, 3, 2), set(2, 3, 1);
    const Solution s = solve_tsp({k}, d);
    const std::vector<std::size_t> tour{0, 1, 3, 2};
    EXPECT_EQ(s.y, tour_adjacency(tour, k));
    EXPECT_DOUBLE_EQ(s.objective, 6.0);
}

TEST(Tsp, TriangleIsTheOnlyTour) {
    const Vec d{0, 2, 3, 2, 0, 4, 3, 4, 0};
    const Solution s = solve_tsp({3}, d);
    EXPECT_EQ(s.y, (Vec{0, 1, 1, 1, 0, 1, 1, 1, 0}));
    EXPECT_DOUBLE_EQ(s.objective, 9.0);
}

Vec random_metric(std::size_t k, std::mt19937_64& rng) {
    std::vector<std::array<double, 2>> p(k);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& q : p) q = {u(rng), u(rng)};
    Vec d(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) d[i * k + j] = std::hypot(p[i][0] - p[j][0], p[i][1] - p[j][1]);
    return d;
}

TEST(Tsp, MatchesPermutationEnumeration) {
    std::mt19937_64 rng(4);
    for (std::size_t k : {5u, 6u, 7u}) {
        const auto Y = oracle::tours(k);
        for (int t = 0; t < 10; ++t) {
            const Vec d = random_metric(k, rng);
            const Solution s = solve_tsp({k}, d);
            double best = 1e300;
            for (const auto& y : Y) best = std::min(best, oracle::tour_length(y, d));
            EXPECT_NEAR(s.objective, best, 1e-12);
            EXPECT_TRUE(is_feasible(Tsp{k}, s.y));
        }
    }
}

TEST(Tsp, Rejections) {
    EXPECT_THROW(solve_tsp({16}, Vec(256, 1.0)), solver_error);
    Vec d{0, 1, 2, 1, 0, 3, 2, 3.5, 0};
    EXPECT_THROW(solve_tsp({3}, d), solver_error);
}

TEST(Assignment, Examples) {
    Solution s = solve_assignment({2}, Vec{1, 2, 2, 1});
    EXPECT_EQ(s.y, (Vec{1, 0, 0, 1}));
    EXPECT_DOUBLE_EQ(s.objective, 2.0);
    s = solve_assignment({2}, Vec{0, 1, 0, 1});
    EXPECT_EQ(s.y[0], 1.0);
}

TEST(Assignment, MatchesPermutationEnumeration) {
    std::mt19937_64 rng(5);
    const auto Y = oracle::permutation_matrices(5);
    for (int t = 0; t < 50; ++t) {
        const Vec w = oracle::gaussian(25, rng);
        const Solution s = solve_assignment({5}, w);
        EXPECT_NEAR(s.objective, oracle::min_value(Y, w), 1e-12);
        EXPECT_TRUE(is_feasible(Assignment{5}, s.y));
    }
}

TEST(Assignment, NonSquareRejected) {
    EXPECT_THROW(solve(Assignment{3}, Vec(6, 1.0)), solver_error);
}

TEST(Invariance, ScaleAndShift) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> lam(0.01, 100), shift(-50, 50);
    for (int t = 0; t < 100; ++t) {
        const Vec w = oracle::gaussian(6, rng);
        const double l = lam(rng), c = shift(rng);
        Vec scaled = w, shifted = w;
        for (auto& v : scaled) v *= l;
        for (auto& v : shifted) v += c;
        for (const SolverSpec& spec : {SolverSpec{TopK{6, 2}}, SolverSpec{Ranking{6}}}) {
            const Vec y = solve(spec, w).y;
            EXPECT_EQ(solve(spec, scaled).y, y);
            EXPECT_EQ(solve(spec, shifted).y, y);
        }
        const Vec a = oracle::gaussian(9, rng);
        Vec a_scaled = a;
        for (auto& v : a_scaled) v *= l;
        EXPECT_EQ(solve(Assignment{3}, a_scaled).y, solve(Assignment{3}, a).y);
    }
}

TEST(Feasibility, RejectsInvalidSolutions) {
    EXPECT_FALSE(is_feasible(TopK{3, 2}, Vec{1, 0, 0}));
    EXPECT_TRUE(is_feasible(TopK{3, 2}, Vec{1, 0, 1}));
    EXPECT_FALSE(is_feasible(Ranking{3}, Vec{1, 1, 2}));
    EXPECT_TRUE(is_feasible(Ranking{3}, Vec{3, 1, 2}));
    EXPECT_FALSE(is_feasible(Assignment{2}, Vec{1, 1, 0, 0}));
    EXPECT_FALSE(is_feasible(GridPath{2, 2, 4}, Vec{1, 0, 0, 1}));
    EXPECT_TRUE(is_feasible(GridPath{2, 2, 8}, Vec{1, 0, 0, 1}));
    // Two disjoint triangles are degree-2 but not Hamiltonian.
    Vec two(36, 0.0);
    auto edge = [&](std::size_t i, std::size_t j) { two[i * 6 + j] = two[j * 6 + i] = 1; };
    edge(0, 1), edge(1, 2), edge(2, 0), edge(3, 4), edge(4, 5), edge(5, 3);
    EXPECT_FALSE(is_feasible(Tsp{6}, two));
}

TEST(InstanceIo, RoundTrip) {
    const std::vector<SolverInstance> cases{
        {ExplicitSet{kE12}, {0.2, 0.8}}, {TopK{3, 2}, {0.5, -0.2, 0.9}}, {Ranking{3}, {0.3, 0.1, 0.2}},
        {GridPath{2, 2, 4}, {1, 10, 1, 1}}, {Tsp{3}, {0, 2, 3, 2, 0, 4, 3, 4, 0}}, {Assignment{2}, {1, 2, 2, 1}}};
    for (const auto& c : cases) {
        const auto j = to_json(c);
        EXPECT_EQ(j.at("kind"), kind_name(c.spec));
        const SolverInstance back = instance_from_json(nlohmann::json::parse(j.dump()));
        EXPECT_EQ(back.omega, c.omega);
        EXPECT_EQ(to_json(back), j);
        EXPECT_EQ(solve(back.spec, back.omega).y, solve(c.spec, c.omega).y);
    }
}

TEST(InstanceIo, RejectsMalformedRecords) {
    EXPECT_THROW(instance_from_json({{"kind", "knapsack"}, {"params", {}}, {"omega", {1}}}), solver_error);
    EXPECT_THROW(instance_from_json({{"kind", "topk"}, {"params", {{"n", 3}, {"k", 1}}}, {"omega", {1, 2}}}),
                 solver_error);
}

}  // namespace
