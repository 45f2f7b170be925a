// verify.hpp - randomized property suites
//
// Each suite draws its own instances from a seeded generator, checks a
// property on every instance and reports the count, pass count and the
// worst instance seen (the first failure, or the tightest pass).

#pragma once

#include "solvergrad/estimators.hpp"
#include "solvergrad/solvers.hpp"
#include "solvergrad/tasks/ranking_retrieval.hpp"
#include "solvergrad/theory.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace solvergrad::verify {

using nlohmann::json;

struct SuiteReport {
    std::string suite;
    std::size_t instances = 0;
    std::size_t passed = 0;
    double seconds = 0;
    json worst_case = nullptr;

    bool ok() const { return instances > 0 && passed == instances; }
};

inline json to_json(const SuiteReport& r) {
    return {{"suite", r.suite},        {"instances", r.instances}, {"passed", r.passed},
            {"ok", r.ok()},            {"seconds", r.seconds},     {"worst_case", r.worst_case}};
}

namespace detail {

// Tracks the worst instance: any failure beats any pass, a smaller score is
// worse among passes.
struct Worst {
    bool failed = false;
    double score = std::numeric_limits<double>::infinity();
    json info = nullptr;

    void offer(bool pass, double s, const std::function<json()>& describe) {
        if (failed) return;
        if (!pass) {
            failed = true;
            info = describe();
            info["failed"] = true;
            return;
        }
        if (s < score) {
            score = s;
            info = describe();
            info["failed"] = false;
        }
    }
};

template <class F>
SuiteReport timed(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteReport r = body();
    r.suite = name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline Vec gaussian(std::size_t n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(n);
    for (auto& x : v) x = normal(rng);
    return v;
}

inline std::size_t uniform(std::size_t lo, std::size_t hi, Rng& rng) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Smallest objective gap between the optimum and any other member.
inline double explicit_gap(const std::vector<Vec>& Y, std::span<const double> omega) {
    std::vector<double> v;
    for (const auto& y : Y) v.push_back(dot(omega, y));
    std::sort(v.begin(), v.end());
    return v.size() < 2 ? std::numeric_limits<double>::infinity() : v[1] - v[0];
}

inline double sorted_gap(std::span<const double> omega) {
    Vec s(omega.begin(), omega.end());
    std::sort(s.begin(), s.end());
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < s.size(); ++i) g = std::min(g, s[i] - s[i - 1]);
    return g;
}

}  // namespace detail

// solve(P(omega)) == solve(omega) for ranking, top-k and explicit sets under
// every projection that leaves the set's argmin unchanged.
inline SuiteReport projections_suite(std::size_t instances = 1000, std::uint64_t seed = 0) {
    return detail::timed("projections", [&] {
        Rng rng(seed);
        SuiteReport r;
        detail::Worst worst;
        while (r.instances < instances) {
            const std::size_t family = detail::uniform(0, 3, rng);
            SolverSpec spec;
            std::vector<Projection> projections{Projection::norm()};
            Vec omega;
            double gap = 0;
            if (family == 0) {
                const std::size_t n = detail::uniform(2, 8, rng);
                spec = Ranking{n};
                omega = detail::gaussian(n, rng);
                gap = detail::sorted_gap(omega);
                projections.push_back(Projection::mean());
                projections.push_back(Projection::standardize());
            } else if (family == 1) {
                const std::size_t n = detail::uniform(2, 10, rng);
                const std::size_t k = detail::uniform(1, n - 1, rng);
                spec = TopK{n, k};
                omega = detail::gaussian(n, rng);
                Vec s = omega;
                std::sort(s.begin(), s.end());
                gap = s[k] - s[k - 1];
                projections.push_back(Projection::mean());
                projections.push_back(Projection::standardize());
            } else {
                // Explicit sets; family 3 places every member on a random
                // hyperplane <a, y> = b so the plane projection applies.
                const std::size_t n = detail::uniform(2, 6, rng);
                const std::size_t m = detail::uniform(2, 10, rng);
                std::vector<Vec> Y;
                Vec a;
                double b = 0;
                if (family == 3) {
                    a = solvergrad::detail::normalized(detail::gaussian(n, rng));
                    b = std::normal_distribution<double>(0.0, 1.0)(rng);
                }
                for (std::size_t i = 0; i < m; ++i) {
                    Vec y = detail::gaussian(n, rng);
                    if (family == 3) {
                        y = solvergrad::detail::plane_projected(a, y);
                        for (std::size_t j = 0; j < n; ++j) y[j] += b * a[j];
                    }
                    Y.push_back(std::move(y));
                }
                omega = detail::gaussian(n, rng);
                gap = detail::explicit_gap(Y, omega);
                spec = ExplicitSet{Y};
                if (family == 3) projections.push_back(Projection::plane(a, b));
            }
            if (!(gap > 1e-6)) continue;  // argmin must be unique
            const Vec y0 = solve(spec, omega).y;
            for (const auto& p : projections) {
                if (r.instances == instances) break;
                ++r.instances;
                const Vec y1 = solve(spec, project(p, omega)).y;
                const bool pass = y1 == y0;
                if (pass) ++r.passed;
                worst.offer(pass, gap, [&] {
                    return json{{"solver", kind_name(spec)}, {"projection", projection_name(p.kind)},
                                {"omega", omega}, {"gap", gap}};
                });
            }
        }
        r.worst_case = worst.info;
        return r;
    });
}

// The identity update with fixed adjoint g and alpha <= alpha_max either
// reaches a member of the better set or, when that set is empty, never
// leaves the initial solution.
inline SuiteReport theorem1_suite(std::size_t instances = 500, std::uint64_t seed = 0) {
    return detail::timed("theorem1", [&] {
        Rng rng(seed);
        SuiteReport r;
        detail::Worst worst;
        while (r.instances < instances) {
            const std::size_t n = detail::uniform(2, 5, rng);
            const std::size_t m = detail::uniform(3, 12, rng);
            std::vector<Vec> raw;
            // Mix of continuous sets and binary sets (ties and shared faces).
            const bool binary = detail::uniform(0, 1, rng) == 1;
            for (std::size_t i = 0; i < m; ++i) {
                Vec y(n);
                if (binary) {
                    for (auto& v : y) v = static_cast<double>(detail::uniform(0, 1, rng));
                } else {
                    y = detail::gaussian(n, rng);
                }
                if (std::find(raw.begin(), raw.end(), y) == raw.end()) raw.push_back(std::move(y));
            }
            std::vector<Vec> Y = theory::extremal_filter(raw, rng, 2000);
            if (Y.size() < 2) continue;
            theory::DynamicsInstance inst;
            inst.Y = Y;
            inst.omega0 = detail::gaussian(n, rng);
            inst.g = detail::gaussian(n, rng);
            if (detail::explicit_gap(Y, inst.omega0) < 1e-9) continue;
            const theory::RayPartition part = theory::ray_partition(Y, inst.omega0, inst.g);
            const double amax = theory::compute_alpha_max(Y, inst.omega0, inst.g);
            if (!(amax > 1e-9)) continue;  // coincident breakpoints
            inst.alpha = std::isfinite(amax) ? amax : 1.0;
            if (!part.breaks.empty()) {
                const double steps = std::ceil(part.breaks.front() / inst.alpha) + 2;
                if (steps > 1e6) continue;
                inst.max_steps = static_cast<std::size_t>(steps);
            } else {
                inst.max_steps = 1000;
            }
            ++r.instances;
            const theory::DynamicsVerdict v = theory::run_dynamics(inst);
            bool pass;
            if (v.better.empty()) {
                pass = !v.reached_better;
            } else {
                pass = v.reached_better &&
                       std::find(v.better.begin(), v.better.end(), v.solution) != v.better.end();
            }
            if (pass) ++r.passed;
            worst.offer(pass, amax, [&] {
                return json{{"Y", Y},          {"omega0", inst.omega0},   {"g", inst.g},
                            {"alpha", inst.alpha}, {"alpha_max", amax},   {"better", v.better.size()},
                            {"reached_better", v.reached_better}, {"steps", v.steps}};
            });
        }
        r.worst_case = worst.info;
        return r;
    });
}

// On {0,1}^n with L1 loss towards a target, the blackbox rule with lambda = 1
// returns exactly the identity adjoint whenever every wrong coordinate
// crosses zero under the perturbation.
inline SuiteReport bb_equivalence_suite(std::size_t instances = 200, std::uint64_t seed = 0) {
    return detail::timed("bb_equivalence", [&] {
        Rng rng(seed);
        SuiteReport r;
        detail::Worst worst;
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        while (r.instances < instances) {
            const std::size_t n = detail::uniform(1, 6, rng);
            std::vector<Vec> cube;
            for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
                Vec y(n);
                for (std::size_t i = 0; i < n; ++i) y[i] = (mask >> i) & 1 ? 1.0 : 0.0;
                cube.push_back(std::move(y));
            }
            const SolverSpec spec = ExplicitSet{cube};
            Vec omega(n), target(n);
            for (auto& v : omega) v = u(rng);
            for (auto& v : target) v = static_cast<double>(detail::uniform(0, 1, rng));
            const Vec y = solve(spec, omega).y;
            Vec g(n);
            bool crossing = true;
            for (std::size_t i = 0; i < n; ++i) {
                g[i] = y[i] > target[i] ? 1.0 : (y[i] < target[i] ? -1.0 : 0.0);
                const double moved = omega[i] + g[i];
                if (g[i] != 0 && (moved == 0 || (moved > 0) == (omega[i] > 0))) crossing = false;
                if (omega[i] == 0) crossing = false;
            }
            if (!crossing) continue;
            ++r.instances;
            EstimatorConfig id, bb;
            bb.rule = Rule::blackbox;
            bb.lambda = 1.0;
            const Vec a = backward_rule(id, omega, g, spec, y);
            const Vec b = backward_rule(bb, omega, g, spec, y);
            const bool pass = a == b;
            if (pass) ++r.passed;
            worst.offer(pass, static_cast<double>(n), [&] {
                return json{{"omega", omega}, {"target", target}, {"identity", a}, {"blackbox", b}};
            });
        }
        r.worst_case = worst.info;
        return r;
    });
}

// Projection Jacobians and relaxation Jacobians against central finite
// differences, plus the sphere presets' vertex membership.
inline SuiteReport relaxations_suite(std::size_t points = 20, std::uint64_t seed = 0, double tolerance = 1e-5) {
    return detail::timed("relaxations", [&] {
        Rng rng(seed);
        SuiteReport r;
        detail::Worst worst;
        const double h = 1e-6;
        auto record = [&](bool pass, double deviation, json what) {
            ++r.instances;
            if (pass) ++r.passed;
            worst.offer(pass, -deviation, [&] {
                what["relative_error"] = deviation;
                return what;
            });
        };
        // Projections: J^T e_i from project_jacobian_apply against FD columns.
        const std::vector<std::string> names{"mean", "norm", "std", "plane"};
        for (const auto& name : names) {
            for (std::size_t t = 0; t < points; ++t) {
                // n >= 3: for n = 2 the std projection is locally constant.
                const std::size_t n = detail::uniform(3, 8, rng);
                const Vec omega = detail::gaussian(n, rng);
                Projection p{projection_from_name(name), {}, 0};
                if (p.kind == ProjectionKind::plane) p = Projection::plane(solvergrad::detail::normalized(detail::gaussian(n, rng)), 0);
                double worst_abs = 0, scale = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    Vec plus = omega, minus = omega;
                    plus[j] += h;
                    minus[j] -= h;
                    const Vec fp = project(p, plus), fm = project(p, minus);
                    for (std::size_t i = 0; i < n; ++i) {
                        Vec e(n, 0.0);
                        e[i] = 1.0;
                        const double jt = project_jacobian_apply(p, omega, e)[j];  // J[i][j]
                        const double fd = (fp[i] - fm[i]) / (2 * h);
                        worst_abs = std::max(worst_abs, std::abs(fd - jt));
                        scale = std::max(scale, std::abs(jt));
                    }
                }
                const double dev = worst_abs / std::max(scale, 1e-300);
                record(dev <= tolerance, dev, {{"check", "projection_jacobian"}, {"projection", name}, {"omega", omega}});
            }
        }
        // Relaxation shapes.
        for (int shape = 0; shape < 6; ++shape) {
            for (std::size_t t = 0; t < points; ++t) {
                const std::size_t n = detail::uniform(3, 7, rng);
                const Vec omega = detail::gaussian(n, rng);
                theory::RelaxationSpec spec;
                std::string label;
                switch (shape) {
                    case 0:
                        spec = theory::FullSpace{0.5 + std::uniform_real_distribution<double>(0, 2)(rng)};
                        label = "full_space";
                        break;
                    case 1:
                        spec = theory::Hyperplane{solvergrad::detail::normalized(detail::gaussian(n, rng)),
                                                  std::normal_distribution<double>(0, 1)(rng), 1.5};
                        label = "hyperplane";
                        break;
                    case 2:
                        spec = theory::Sphere{detail::gaussian(n, rng), 2.0};
                        label = "sphere";
                        break;
                    case 3:
                        spec = theory::hypercube_sphere(n);
                        label = "hypercube_sphere";
                        break;
                    case 4:
                        spec = theory::permutahedron_sphere(n);
                        label = "permutahedron_sphere";
                        break;
                    default:
                        spec = theory::permutahedron_cap(n);
                        label = "permutahedron_cap";
                        break;
                }
                const theory::JacobianReport rep = theory::check_relaxation_jacobians(spec, omega, tolerance, h);
                record(rep.passed, rep.max_deviation, {{"check", "relaxation_jacobian"}, {"shape", label}, {"omega", omega}});
            }
        }
        // Every vertex of {0,1}^n and every permutation of (1..n) lies on
        // its preset sphere.
        for (std::size_t n = 1; n <= 6; ++n) {
            const theory::Sphere cube = theory::hypercube_sphere(n);
            double dev = 0;
            for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
                double s = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = ((mask >> i) & 1 ? 1.0 : 0.0) - cube.c[i];
                    s += d * d;
                }
                dev = std::max(dev, std::abs(std::sqrt(s) - cube.r) / cube.r);
            }
            record(dev <= 1e-12, dev, {{"check", "hypercube_vertices_on_sphere"}, {"n", n}});

            const theory::Sphere perm = theory::permutahedron_sphere(n);
            Vec y(n);
            std::iota(y.begin(), y.end(), 1.0);
            double pdev = 0;
            do {
                double s = 0;
                for (std::size_t i = 0; i < n; ++i) s += (y[i] - perm.c[i]) * (y[i] - perm.c[i]);
                pdev = std::max(pdev, std::abs(std::sqrt(s) - perm.r) / std::max(perm.r, 1.0));
            } while (std::next_permutation(y.begin(), y.end()));
            record(pdev <= 1e-12, pdev, {{"check", "permutations_on_sphere"}, {"n", n}});
        }
        r.worst_case = worst.info;
        return r;
    });
}

// Gumbel perturb-and-solve against softmax (total variation) and the
// Sum-of-Gamma sample mean against tau (H_s - log s) / k.
struct SamplerOptions {
    std::size_t gumbel_samples = 100000;
    std::size_t gumbel_n = 4;
    double tv_tolerance = 0.02;
    std::size_t sog_samples = 1000000;
    double sog_k = 10, sog_tau = 10;
    int sog_s = 10;
    double sog_relative_tolerance = 0.02;
};

inline double gumbel_tv_distance(std::span<const double> logits, std::size_t samples, Rng& rng) {
    const std::size_t n = logits.size();
    std::vector<double> counts(n, 0.0);
    const SolverSpec onehot = TopK{n, 1};
    for (std::size_t s = 0; s < samples; ++s) {
        const Vec y = sample_perturbed(onehot, logits, Gumbel{1.0}, rng).y;
        for (std::size_t i = 0; i < n; ++i) counts[i] += y[i];
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (double l : logits) z += std::exp(l - mx);
    double tv = 0;
    for (std::size_t i = 0; i < n; ++i)
        tv += std::abs(counts[i] / static_cast<double>(samples) - std::exp(logits[i] - mx) / z);
    return tv / 2;
}

inline double sog_expected_mean(double k, double tau, int s) {
    double hs = 0;
    for (int i = 1; i <= s; ++i) hs += 1.0 / i;
    return tau * (hs - std::log(static_cast<double>(s))) / k;
}

inline SuiteReport samplers_suite(std::uint64_t seed = 0, SamplerOptions o = {}) {
    return detail::timed("samplers", [&] {
        Rng rng(seed);
        SuiteReport r;
        detail::Worst worst;
        const Vec logits = detail::gaussian(o.gumbel_n, rng);
        const double tv = gumbel_tv_distance(logits, o.gumbel_samples, rng);
        ++r.instances;
        if (tv <= o.tv_tolerance) ++r.passed;
        worst.offer(tv <= o.tv_tolerance, -tv / o.tv_tolerance, [&] {
            return json{{"check", "gumbel_softmax_tv"}, {"logits", logits}, {"tv", tv}, {"samples", o.gumbel_samples}};
        });

        double total = 0;
        for (std::size_t i = 0; i < o.sog_samples; ++i) total += sample_sog(o.sog_k, o.sog_tau, o.sog_s, rng);
        const double mean = total / static_cast<double>(o.sog_samples);
        const double expected = sog_expected_mean(o.sog_k, o.sog_tau, o.sog_s);
        const double rel = std::abs(mean - expected) / std::abs(expected);
        ++r.instances;
        if (rel <= o.sog_relative_tolerance) ++r.passed;
        worst.offer(rel <= o.sog_relative_tolerance, -rel / o.sog_relative_tolerance, [&] {
            return json{{"check", "sum_of_gamma_mean"}, {"mean", mean}, {"expected", expected}, {"relative_error", rel},
                        {"samples", o.sog_samples}};
        });
        r.worst_case = worst.info;
        return r;
    });
}

namespace detail {

// Minimum of <omega, y> over an enumerated set, first minimiser wins.
inline std::pair<double, Vec> enumerate_min(const std::vector<Vec>& Y, std::span<const double> omega) {
    double best = std::numeric_limits<double>::infinity();
    Vec arg;
    for (const auto& y : Y) {
        const double v = dot(omega, y);
        if (v < best) {
            best = v;
            arg = y;
        }
    }
    return {best, arg};
}

inline std::vector<Vec> all_permutation_matrices(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::vector<Vec> out;
    do {
        Vec y(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) y[i * n + p[i]] = 1.0;
        out.push_back(std::move(y));
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

inline std::vector<Vec> all_tours(std::size_t k) {
    std::vector<std::size_t> rest(k - 1);
    std::iota(rest.begin(), rest.end(), 1);
    std::vector<Vec> out;
    do {
        std::vector<std::size_t> tour{0};
        tour.insert(tour.end(), rest.begin(), rest.end());
        out.push_back(tour_adjacency(tour, k));
    } while (std::next_permutation(rest.begin(), rest.end()));
    return out;
}

inline void grid_paths(std::size_t h, std::size_t w, int conn, std::size_t at, Vec& visited, std::vector<Vec>& out) {
    visited[at] = 1.0;
    if (at == h * w - 1) {
        out.push_back(visited);
    } else {
        const int r = static_cast<int>(at / w), c = static_cast<int>(at % w);
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                if (conn == 4 && dr != 0 && dc != 0) continue;
                const int nr = r + dr, nc = c + dc;
                if (nr < 0 || nc < 0 || nr >= static_cast<int>(h) || nc >= static_cast<int>(w)) continue;
                const std::size_t v = static_cast<std::size_t>(nr) * w + static_cast<std::size_t>(nc);
                if (visited[v] == 0.0) grid_paths(h, w, conn, v, visited, out);
            }
    }
    visited[at] = 0.0;
}

}  // namespace detail

// Exact solvers against enumeration of their feasible sets.
inline SuiteReport solvers_suite(std::size_t per_solver = 40, std::uint64_t seed = 0) {
    return detail::timed("solvers", [&] {
        Rng rng(seed);
        SuiteReport r;
        detail::Worst worst;
        std::uniform_real_distribution<double> pos(0.1, 5.0);
        auto check = [&](const SolverSpec& spec, const std::vector<Vec>& Y, const Vec& omega) {
            ++r.instances;
            const Solution s = solve(spec, omega);
            const auto [best, arg] = detail::enumerate_min(Y, omega);
            const double obj = dot(omega, s.y);
            const double err = std::abs(obj - best) / std::max(1.0, std::abs(best));
            const bool pass = is_feasible(spec, s.y) && err <= 1e-9;
            if (pass) ++r.passed;
            worst.offer(pass, -err, [&] {
                return json{{"solver", kind_name(spec)}, {"omega", omega}, {"objective", obj}, {"enumerated", best}};
            });
        };
        for (std::size_t t = 0; t < per_solver; ++t) {
            {
                const std::size_t n = detail::uniform(2, 8, rng), k = detail::uniform(1, n, rng);
                std::vector<Vec> Y;
                for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
                    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != k) continue;
                    Vec y(n);
                    for (std::size_t i = 0; i < n; ++i) y[i] = (mask >> i) & 1 ? 1.0 : 0.0;
                    Y.push_back(std::move(y));
                }
                check(TopK{n, k}, Y, detail::gaussian(n, rng));
            }
            {
                const std::size_t n = detail::uniform(1, 6, rng);
                Vec y(n);
                std::iota(y.begin(), y.end(), 1.0);
                std::vector<Vec> Y;
                do Y.push_back(y);
                while (std::next_permutation(y.begin(), y.end()));
                check(Ranking{n}, Y, detail::gaussian(n, rng));
            }
            {
                const std::size_t n = detail::uniform(1, 5, rng);
                check(Assignment{n}, detail::all_permutation_matrices(n), detail::gaussian(n * n, rng));
            }
            {
                const std::size_t k = detail::uniform(3, 7, rng);
                Vec d(k * k, 0.0);
                for (std::size_t i = 0; i < k; ++i)
                    for (std::size_t j = i + 1; j < k; ++j) d[i * k + j] = d[j * k + i] = pos(rng);
                // Enumerated tours count both directions of each edge.
                check(Tsp{k}, detail::all_tours(k), d);
            }
            {
                const std::size_t h = detail::uniform(1, 3, rng), w = detail::uniform(1, 3, rng);
                const int conn = detail::uniform(0, 1, rng) ? 8 : 4;
                Vec omega(h * w);
                for (auto& v : omega) v = pos(rng);
                std::vector<Vec> Y;
                Vec visited(h * w, 0.0);
                detail::grid_paths(h, w, conn, 0, visited, Y);
                check(GridPath{h, w, conn}, Y, omega);
            }
        }
        r.worst_case = worst.info;
        return r;
    });
}

namespace detail {

// Ranks by enumerating rank vectors in lexicographic order and keeping the
// first minimiser of <omega, y>.
inline Vec brute_force_ranks(std::span<const double> omega) {
    Vec y(omega.size());
    std::iota(y.begin(), y.end(), 1.0);
    Vec best;
    double best_v = std::numeric_limits<double>::infinity();
    do {
        const double v = dot(omega, y);
        if (v < best_v) {
            best_v = v;
            best = y;
        }
    } while (std::next_permutation(y.begin(), y.end()));
    return best;
}

}  // namespace detail

// recall_at_k and recall_loss against brute-force ranking, compared exactly.
inline SuiteReport recall_suite(std::size_t instances = 500, std::uint64_t seed = 0) {
    return detail::timed("recall", [&] {
        Rng rng(seed);
        SuiteReport r;
        detail::Worst worst;
        for (std::size_t t = 0; t < instances; ++t) {
            const std::size_t n = detail::uniform(1, 6, rng);
            Vec omega(n), ystar(n);
            // Every third case uses small integers so ties occur.
            const bool ties = t % 3 == 0;
            for (auto& v : omega) v = ties ? static_cast<double>(detail::uniform(0, 3, rng)) : detail::gaussian(1, rng)[0];
            for (auto& v : ystar) v = static_cast<double>(detail::uniform(0, 1, rng));
            ystar[detail::uniform(0, n - 1, rng)] = 1.0;

            const Vec rank = detail::brute_force_ranks(omega);
            std::vector<std::size_t> rel;
            Vec rel_scores;
            for (std::size_t i = 0; i < n; ++i)
                if (ystar[i] == 1.0) {
                    rel.push_back(i);
                    rel_scores.push_back(omega[i]);
                }
            const Vec rank_plus = detail::brute_force_ranks(rel_scores);
            double loss = 0;
            for (std::size_t j = 0; j < rel.size(); ++j) loss += std::log1p(std::log1p(rank[rel[j]] - rank_plus[j]));
            loss /= static_cast<double>(rel.size());

            bool pass = tasks::recall_loss(omega, ystar) == loss;
            for (std::size_t K = 1; K <= n; ++K) {
                double hit = 0;
                for (std::size_t i : rel)
                    if (rank[i] <= static_cast<double>(K)) hit = 1;
                pass = pass && tasks::recall_at_k(omega, ystar, K) == hit;
            }
            ++r.instances;
            if (pass) ++r.passed;
            worst.offer(pass, static_cast<double>(n), [&] {
                return json{{"omega", omega}, {"ystar", ystar}, {"oracle_loss", loss}};
            });
        }
        r.worst_case = worst.info;
        return r;
    });
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"projections", "theorem1", "relaxations", "samplers",
                                                "solvers",     "bb_equivalence", "recall"};
    return names;
}

inline SuiteReport run_suite(const std::string& name, std::uint64_t seed = 0) {
    if (name == "projections") return projections_suite(1000, seed);
    if (name == "theorem1") return theorem1_suite(500, seed);
    if (name == "relaxations") return relaxations_suite(20, seed);
    if (name == "samplers") return samplers_suite(seed);
    if (name == "solvers") return solvers_suite(40, seed);
    if (name == "bb_equivalence") return bb_equivalence_suite(200, seed);
    if (name == "recall") return recall_suite(500, seed);
    throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace solvergrad::verify
