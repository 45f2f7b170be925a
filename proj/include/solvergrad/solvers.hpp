// solvers.hpp - exact linear-cost combinatorial solvers
//
// Every solver returns argmin_{y in Y} <omega, y> for its finite set Y.
// Sampling (argmax) is obtained by negating the cost. Ties are resolved
// deterministically: lexicographically smallest y, except for the
// explicit-set solver, which can be told to prefer a previous solution.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

namespace solvergrad {

struct solver_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw solver_error("dot: length mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct Solution {
    Vec y;
    double objective = 0;  // <omega, y>; TSP counts each undirected edge once
};

// Explicitly enumerated solution set; members must be distinct.
struct ExplicitSet {
    std::vector<Vec> members;
};

// Indicator of the k smallest cost entries.
struct TopK {
    std::size_t n = 0;
    std::size_t k = 0;
};

// y_i is the rank of item i; rank 1 goes to the largest cost entry.
struct Ranking {
    std::size_t n = 0;
};

// Vertex-weighted path from top-left to bottom-right; y marks visited cells.
struct GridPath {
    std::size_t height = 0;
    std::size_t width = 0;
    int connectivity = 8;
};

// Hamiltonian cycle over a symmetric distance matrix, y is the flattened
// symmetric adjacency matrix.
struct Tsp {
    std::size_t cities = 0;
};

// Permutation matrix of a square linear assignment problem.
struct Assignment {
    std::size_t n = 0;
};

using SolverSpec = std::variant<ExplicitSet, TopK, Ranking, GridPath, Tsp, Assignment>;

inline constexpr std::size_t kMaxTspCities = 15;

inline std::string kind_name(const SolverSpec& spec) {
    struct V {
        std::string operator()(const ExplicitSet&) const { return "explicit"; }
        std::string operator()(const TopK&) const { return "topk"; }
        std::string operator()(const Ranking&) const { return "ranking"; }
        std::string operator()(const GridPath&) const { return "grid_path"; }
        std::string operator()(const Tsp&) const { return "tsp"; }
        std::string operator()(const Assignment&) const { return "assignment"; }
    };
    return std::visit(V{}, spec);
}

inline std::size_t dimension(const SolverSpec& spec) {
    struct V {
        std::size_t operator()(const ExplicitSet& s) const { return s.members.empty() ? 0 : s.members.front().size(); }
        std::size_t operator()(const TopK& s) const { return s.n; }
        std::size_t operator()(const Ranking& s) const { return s.n; }
        std::size_t operator()(const GridPath& s) const { return s.height * s.width; }
        std::size_t operator()(const Tsp& s) const { return s.cities * s.cities; }
        std::size_t operator()(const Assignment& s) const { return s.n * s.n; }
    };
    return std::visit(V{}, spec);
}

// Cost and solution are laid out as a symmetric matrix (TSP). Callers that
// inject per-entry noise mirror it so the layout stays symmetric.
inline bool symmetric_layout(const SolverSpec& spec) { return std::holds_alternative<Tsp>(spec); }

namespace detail {

inline void require_finite(std::span<const double> omega, const char* who) {
    for (double v : omega) {
        if (!std::isfinite(v)) throw solver_error(std::string(who) + ": non-finite cost entry");
    }
}

inline void require_length(std::span<const double> omega, std::size_t n, const char* who) {
    if (omega.size() != n) {
        throw solver_error(std::string(who) + ": cost length " + std::to_string(omega.size()) + ", expected " +
                           std::to_string(n));
    }
}

inline Solution make_solution(Vec y, std::span<const double> omega) {
    const double obj = dot(omega, y);
    return {std::move(y), obj};
}

}  // namespace detail

inline Solution solve_explicit(const ExplicitSet& spec, std::span<const double> omega,
                               std::optional<std::span<const double>> previous = std::nullopt) {
    if (spec.members.empty()) throw solver_error("explicit: empty solution set");
    detail::require_length(omega, spec.members.front().size(), "explicit");
    detail::require_finite(omega, "explicit");
    std::size_t best = 0;
    double best_obj = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spec.members.size(); ++i) {
        const double obj = dot(omega, spec.members[i]);
        if (obj < best_obj || (obj == best_obj && spec.members[i] < spec.members[best])) {
            best = i;
            best_obj = obj;
        }
    }
    if (previous) {
        const Vec prev(previous->begin(), previous->end());
        for (const auto& m : spec.members) {
            if (m == prev && dot(omega, m) == best_obj) return {m, best_obj};
        }
    }
    return {spec.members[best], best_obj};
}

inline Solution solve_topk(const TopK& spec, std::span<const double> omega) {
    if (spec.k < 1 || spec.k > spec.n) {
        throw solver_error("topk: k=" + std::to_string(spec.k) + " out of range for n=" + std::to_string(spec.n));
    }
    detail::require_length(omega, spec.n, "topk");
    detail::require_finite(omega, "topk");
    std::vector<std::size_t> idx(spec.n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return omega[a] < omega[b]; });
    Vec y(spec.n, 0.0);
    for (std::size_t i = 0; i < spec.k; ++i) y[idx[i]] = 1.0;
    return detail::make_solution(std::move(y), omega);
}

inline Solution solve_ranking(const Ranking& spec, std::span<const double> omega) {
    if (spec.n < 1) throw solver_error("ranking: n must be positive");
    detail::require_length(omega, spec.n, "ranking");
    detail::require_finite(omega, "ranking");
    std::vector<std::size_t> idx(spec.n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return omega[a] > omega[b]; });
    Vec y(spec.n);
    for (std::size_t r = 0; r < spec.n; ++r) y[idx[r]] = static_cast<double>(r + 1);
    return detail::make_solution(std::move(y), omega);
}

inline Solution solve_ranking(std::span<const double> omega) { return solve_ranking(Ranking{omega.size()}, omega); }

// Neighbour expansion order is fixed (row-major offsets), which makes ties
// deterministic.
inline Solution solve_grid_path(const GridPath& spec, std::span<const double> omega) {
    const std::size_t h = spec.height, w = spec.width;
    if (h == 0 || w == 0) throw solver_error("grid_path: empty grid");
    if (spec.connectivity != 4 && spec.connectivity != 8) throw solver_error("grid_path: connectivity must be 4 or 8");
    detail::require_length(omega, h * w, "grid_path");
    for (double v : omega) {
        if (!(v > 0) || !std::isfinite(v)) throw solver_error("grid_path: vertex costs must be positive and finite");
    }
    static constexpr int offsets8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
    static constexpr int offsets4[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
    const std::size_t n = h * w;
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> parent(n, n);
    std::vector<char> done(n, 0);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[0] = omega[0];
    queue.emplace(dist[0], 0);
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (done[u]) continue;
        done[u] = 1;
        if (u == n - 1) break;
        const int r = static_cast<int>(u / w), c = static_cast<int>(u % w);
        const int count = spec.connectivity;
        for (int e = 0; e < count; ++e) {
            const int dr = count == 8 ? offsets8[e][0] : offsets4[e][0];
            const int dc = count == 8 ? offsets8[e][1] : offsets4[e][1];
            const int nr = r + dr, nc = c + dc;
            if (nr < 0 || nc < 0 || nr >= static_cast<int>(h) || nc >= static_cast<int>(w)) continue;
            const std::size_t v = static_cast<std::size_t>(nr) * w + static_cast<std::size_t>(nc);
            if (done[v]) continue;
            const double nd = d + omega[v];
            if (nd < dist[v]) {
                dist[v] = nd;
                parent[v] = u;
                queue.emplace(nd, v);
            }
        }
    }
    Vec y(n, 0.0);
    for (std::size_t v = n - 1;; v = parent[v]) {
        y[v] = 1.0;
        if (v == 0) break;
    }
    return detail::make_solution(std::move(y), omega);
}

// Held-Karp dynamic program. tail[S][j] is the cheapest way to finish the
// tour from city j when the visited set is S (always containing city 0 and
// j). Reconstruction walks forward choosing the smallest next city that
// attains the optimum, giving the lexicographically smallest optimal tour.
// Diagonal entries are ignored (no solution uses them).
inline std::vector<std::size_t> tsp_tour(const Tsp& spec, std::span<const double> omega) {
    const std::size_t k = spec.cities;
    if (k < 3) throw solver_error("tsp: at least 3 cities required");
    if (k > kMaxTspCities) {
        throw solver_error("tsp: " + std::to_string(k) + " cities exceeds the exact solver limit of " +
                           std::to_string(kMaxTspCities));
    }
    detail::require_length(omega, k * k, "tsp");
    detail::require_finite(omega, "tsp");
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const double a = omega[i * k + j], b = omega[j * k + i];
            if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) {
                throw solver_error("tsp: distance matrix is not symmetric");
            }
        }
    auto d = [&](std::size_t i, std::size_t j) { return omega[i * k + j]; };
    const std::size_t full = (std::size_t{1} << k) - 1;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> tail((full + 1) * k, inf);
    auto at = [&](std::size_t set, std::size_t j) -> double& { return tail[set * k + j]; };
    for (std::size_t j = 1; j < k; ++j) at(full, j) = d(j, 0);
    for (std::size_t set = full; set-- > 1;) {
        if (!(set & 1)) continue;
        for (std::size_t j = 0; j < k; ++j) {
            if (!(set & (std::size_t{1} << j))) continue;
            if (j == 0 && set != 1) continue;
            double best = inf;
            for (std::size_t c = 1; c < k; ++c) {
                if (set & (std::size_t{1} << c)) continue;
                best = std::min(best, d(j, c) + at(set | (std::size_t{1} << c), c));
            }
            at(set, j) = best;
        }
    }
    std::vector<std::size_t> tour{0};
    std::size_t set = 1, j = 0;
    while (tour.size() < k) {
        const double target = at(set, j);
        for (std::size_t c = 1; c < k; ++c) {
            if (set & (std::size_t{1} << c)) continue;
            if (d(j, c) + at(set | (std::size_t{1} << c), c) == target) {
                tour.push_back(c);
                set |= std::size_t{1} << c;
                j = c;
                break;
            }
        }
    }
    return tour;
}

inline Vec tour_adjacency(std::span<const std::size_t> tour, std::size_t k) {
    Vec y(k * k, 0.0);
    for (std::size_t i = 0; i < tour.size(); ++i) {
        const std::size_t a = tour[i], b = tour[(i + 1) % tour.size()];
        y[a * k + b] = y[b * k + a] = 1.0;
    }
    return y;
}

inline Solution solve_tsp(const Tsp& spec, std::span<const double> omega) {
    const auto tour = tsp_tour(spec, omega);
    Vec y = tour_adjacency(tour, spec.cities);
    const double obj = dot(omega, y) / 2.0;
    return {std::move(y), obj};
}

namespace detail {

// Hungarian algorithm (shortest augmenting path with potentials) on rows
// restricted to `rows` and columns restricted to `cols`. Returns the optimal
// total cost.
inline double hungarian_cost(std::span<const double> cost, std::size_t n, const std::vector<std::size_t>& rows,
                             const std::vector<std::size_t>& cols) {
    const std::size_t m = rows.size();
    if (m == 0) return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(m + 1, 0), v(m + 1, 0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    auto a = [&](std::size_t i, std::size_t j) { return cost[rows[i - 1] * n + cols[j - 1]]; };
    for (std::size_t i = 1; i <= m; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0;
    for (std::size_t j = 1; j <= m; ++j) total += a(p[j], j);
    return total;
}

}  // namespace detail

// Returns the column assigned to each row. Ties go to the lexicographically
// smallest assignment: rows are fixed in order, each to the smallest column
// that still admits an optimal completion (relative tolerance 1e-12).
inline std::vector<std::size_t> assignment_columns(const Assignment& spec, std::span<const double> omega) {
    const std::size_t n = spec.n;
    if (n == 0) throw solver_error("assignment: empty matrix");
    if (omega.size() != n * n) throw solver_error("assignment: cost is not a square " + std::to_string(n) + "x" +
                                                  std::to_string(n) + " matrix");
    detail::require_finite(omega, "assignment");
    std::vector<std::size_t> rows(n), cols(n);
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    double remaining = detail::hungarian_cost(omega, n, rows, cols);
    std::vector<std::size_t> result(n);
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<std::size_t> rest_rows(rows.begin() + 1, rows.end());
        bool placed = false;
        for (std::size_t ci = 0; ci < cols.size() && !placed; ++ci) {
            std::vector<std::size_t> rest_cols = cols;
            rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(ci));
            const double sub = omega[r * n + cols[ci]] + detail::hungarian_cost(omega, n, rest_rows, rest_cols);
            const double tol = 1e-12 * std::max(1.0, std::abs(remaining));
            if (sub <= remaining + tol) {
                result[r] = cols[ci];
                remaining -= omega[r * n + cols[ci]];
                cols = std::move(rest_cols);
                placed = true;
            }
        }
        rows = std::move(rest_rows);
    }
    return result;
}

inline Solution solve_assignment(const Assignment& spec, std::span<const double> omega) {
    const auto cols = assignment_columns(spec, omega);
    Vec y(spec.n * spec.n, 0.0);
    for (std::size_t r = 0; r < spec.n; ++r) y[r * spec.n + cols[r]] = 1.0;
    return detail::make_solution(std::move(y), omega);
}

inline Solution solve(const SolverSpec& spec, std::span<const double> omega,
                      std::optional<std::span<const double>> previous = std::nullopt) {
    struct V {
        std::span<const double> omega;
        std::optional<std::span<const double>> previous;
        Solution operator()(const ExplicitSet& s) const { return solve_explicit(s, omega, previous); }
        Solution operator()(const TopK& s) const { return solve_topk(s, omega); }
        Solution operator()(const Ranking& s) const { return solve_ranking(s, omega); }
        Solution operator()(const GridPath& s) const { return solve_grid_path(s, omega); }
        Solution operator()(const Tsp& s) const { return solve_tsp(s, omega); }
        Solution operator()(const Assignment& s) const { return solve_assignment(s, omega); }
    };
    return std::visit(V{omega, previous}, spec);
}

// Checks that y belongs to the solution set described by spec.
inline bool is_feasible(const SolverSpec& spec, std::span<const double> y) {
    if (y.size() != dimension(spec)) return false;
    auto is_binary = [&] { return std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0 || v == 1.0; }); };
    struct V {
        std::span<const double> y;
        decltype(is_binary)& binary;
        bool operator()(const ExplicitSet& s) const {
            return std::any_of(s.members.begin(), s.members.end(),
                               [&](const Vec& m) { return std::equal(m.begin(), m.end(), y.begin(), y.end()); });
        }
        bool operator()(const TopK& s) const {
            return binary() && std::count(y.begin(), y.end(), 1.0) == static_cast<std::ptrdiff_t>(s.k);
        }
        bool operator()(const Ranking& s) const {
            std::vector<double> sorted(y.begin(), y.end());
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t i = 0; i < s.n; ++i)
                if (sorted[i] != static_cast<double>(i + 1)) return false;
            return true;
        }
        bool operator()(const GridPath& s) const {
            if (!binary()) return false;
            const std::size_t n = s.height * s.width;
            if (y[0] != 1.0 || y[n - 1] != 1.0) return false;
            // Marked cells must form a connected set containing both corners.
            std::vector<char> seen(n, 0);
            std::vector<std::size_t> stack{0};
            seen[0] = 1;
            while (!stack.empty()) {
                const std::size_t u = stack.back();
                stack.pop_back();
                const int r = static_cast<int>(u / s.width), c = static_cast<int>(u % s.width);
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (!dr && !dc) continue;
                        if (s.connectivity == 4 && dr && dc) continue;
                        const int nr = r + dr, nc = c + dc;
                        if (nr < 0 || nc < 0 || nr >= static_cast<int>(s.height) || nc >= static_cast<int>(s.width))
                            continue;
                        const std::size_t v = static_cast<std::size_t>(nr) * s.width + static_cast<std::size_t>(nc);
                        if (y[v] == 1.0 && !seen[v]) {
                            seen[v] = 1;
                            stack.push_back(v);
                        }
                    }
            }
            for (std::size_t v = 0; v < n; ++v)
                if (y[v] == 1.0 && !seen[v]) return false;
            return true;
        }
        bool operator()(const Tsp& s) const {
            const std::size_t k = s.cities;
            if (!binary()) return false;
            for (std::size_t i = 0; i < k; ++i) {
                if (y[i * k + i] != 0.0) return false;
                int degree = 0;
                for (std::size_t j = 0; j < k; ++j) {
                    if (y[i * k + j] != y[j * k + i]) return false;
                    degree += y[i * k + j] == 1.0;
                }
                if (degree != 2) return false;
            }
            // Degree 2 everywhere; a single cycle must reach all cities.
            std::size_t prev = k, cur = 0, steps = 0;
            do {
                std::size_t next = k;
                for (std::size_t j = 0; j < k; ++j)
                    if (y[cur * k + j] == 1.0 && j != prev) {
                        next = j;
                        break;
                    }
                prev = cur;
                cur = next;
                ++steps;
            } while (cur != 0 && cur != k && steps <= k);
            return cur == 0 && steps == k;
        }
        bool operator()(const Assignment& s) const {
            if (!binary()) return false;
            for (std::size_t i = 0; i < s.n; ++i) {
                double row = 0, col = 0;
                for (std::size_t j = 0; j < s.n; ++j) {
                    row += y[i * s.n + j];
                    col += y[j * s.n + i];
                }
                if (row != 1.0 || col != 1.0) return false;
            }
            return true;
        }
    };
    return std::visit(V{y, is_binary}, spec);
}

// Validates the structural invariants of a spec (non-empty finite Y, distinct
// explicit members, parameter ranges).
inline void validate(const SolverSpec& spec) {
    struct V {
        void operator()(const ExplicitSet& s) const {
            if (s.members.empty()) throw solver_error("explicit: empty solution set");
            const std::size_t n = s.members.front().size();
            for (const auto& m : s.members)
                if (m.size() != n) throw solver_error("explicit: members have different lengths");
            auto sorted = s.members;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw solver_error("explicit: duplicate members");
        }
        void operator()(const TopK& s) const {
            if (s.k < 1 || s.k > s.n) throw solver_error("topk: k out of range");
        }
        void operator()(const Ranking& s) const {
            if (s.n < 1) throw solver_error("ranking: n must be positive");
        }
        void operator()(const GridPath& s) const {
            if (s.height == 0 || s.width == 0) throw solver_error("grid_path: empty grid");
            if (s.connectivity != 4 && s.connectivity != 8) throw solver_error("grid_path: connectivity must be 4 or 8");
        }
        void operator()(const Tsp& s) const {
            if (s.cities < 3) throw solver_error("tsp: at least 3 cities required");
            if (s.cities > kMaxTspCities) throw solver_error("tsp: city count exceeds exact solver limit");
        }
        void operator()(const Assignment& s) const {
            if (s.n == 0) throw solver_error("assignment: empty matrix");
        }
    };
    std::visit(V{}, spec);
}

}  // namespace solvergrad
