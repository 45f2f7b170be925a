// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <solvergrad/config.hpp>
#include <solvergrad/run.hpp>
#include <solvergrad/verify.hpp>

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

using namespace solvergrad;
using nlohmann::json;

namespace {

// Tolerances and budgets.
constexpr std::size_t kProjectionInstances = 1000;
constexpr double kProjectionSeconds = 10;
constexpr std::size_t kTheoremInstances = 500;
constexpr double kTheoremSeconds = 60;
constexpr std::size_t kBbInstances = 200;
constexpr std::size_t kRelaxationPoints = 20;
constexpr double kRelaxationTolerance = 1e-5;
constexpr double kGumbelTv = 0.02;
constexpr std::size_t kGumbelSamples = 100000;
constexpr double kSogRelative = 0.02;
constexpr std::size_t kSogSamples = 1000000;
constexpr double kSamplerSeconds = 30;
constexpr double kTspAccuracy = 0.90;
constexpr int kTspMarginWins = 4;
constexpr double kTspSeconds = 600;
constexpr double kCollapseDrop = 0.40;
constexpr double kIdentityBand = 0.25;
constexpr int kRobustWins = 4;
constexpr double kGridRatio = 1.10;
constexpr int kGridEpochs = 50;
constexpr double kGridSeconds = 300;
constexpr std::size_t kRecallInstances = 500;

int failures = 0;

void report(int id, bool ok, const std::string& name, const std::string& detail) {
    if (!ok) ++failures;
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string list(const std::vector<double>& v, int digits = 3) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i], digits);
    return s + "]";
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

std::string suite_detail(const verify::SuiteReport& r) {
    return std::to_string(r.passed) + "/" + std::to_string(r.instances) + " in " + fmt(r.seconds, 2) + " s";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<RunSummary> run_all(const std::vector<json>& configs) {
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<RunSummary> out(configs.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, configs.size()); ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < configs.size();) out[i] = run_training(config::parse_run_config(configs[i]));
        });
    for (auto& t : pool) t.join();
    return out;
}

// Globe TSP(5): 30 entities, 500/200 instances, 100 epochs, noise margin
// alpha = 0.1 during the first 50 epochs.
json tsp_config(std::uint64_t seed) {
    json j = json::parse(R"({
        "task": {"kind": "globe_tsp", "num_entities": 30, "k": 5, "num_train": 500, "num_test": 200},
        "estimator": {"rule": "identity", "projection": "std", "margin": {"kind": "noise", "alpha": 0.1}},
        "corruption": {"margin_start": 0, "margin_end": 50},
        "optimizer": {"kind": "adam", "learning_rate": 0.001, "batch_size": 20, "decay_epochs": [75]},
        "epochs": 100,
        "eval_every": 100
    })");
    j["seed"] = seed;
    return j;
}

json blackbox(json j) {
    j["estimator"]["rule"] = "blackbox";
    j["estimator"]["lambda"] = 20;
    j["estimator"]["projection"] = "none";
    return j;
}

double train_cost_norm(const RunSummary& s, int from, int to) {
    std::vector<double> v;
    for (const auto& r : s.records)
        if (r.split == "train" && r.epoch >= from && r.epoch <= to) v.push_back(r.cost_norm);
    return v.empty() ? 0.0 : mean(v);
}

void criterion1() {
    const auto r = verify::projections_suite(kProjectionInstances, 0);
    report(1, r.ok() && r.seconds < kProjectionSeconds, "projection invariance", suite_detail(r));
}

void criterion2() {
    const auto r = verify::theorem1_suite(kTheoremInstances, 0);
    report(2, r.ok() && r.seconds < kTheoremSeconds, "better-set dichotomy", suite_detail(r));
}

void criterion3() {
    const auto r = verify::bb_equivalence_suite(kBbInstances, 0);
    report(3, r.ok(), "blackbox equals identity on crossing hypercube cases", suite_detail(r));
}

void criterion4() {
    const auto r = verify::relaxations_suite(kRelaxationPoints, 0, kRelaxationTolerance);
    std::string worst = r.worst_case.is_null() ? "" : ", worst " + r.worst_case.dump();
    report(4, r.ok(), "projection Jacobians and relaxations", suite_detail(r) + worst);
}

void criterion5() {
    verify::SamplerOptions o;
    o.gumbel_samples = kGumbelSamples;
    o.tv_tolerance = kGumbelTv;
    o.sog_samples = kSogSamples;
    o.sog_relative_tolerance = kSogRelative;
    const auto r = verify::samplers_suite(0, o);
    report(5, r.ok() && r.seconds < kSamplerSeconds, "Gumbel and Sum-of-Gamma samplers",
           suite_detail(r) + ", worst " + r.worst_case.dump());
}

void criterion6() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<json> configs;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        configs.push_back(tsp_config(s));
        json off = tsp_config(s);
        off["estimator"]["margin"] = {{"kind", "none"}, {"alpha", 0}};
        configs.push_back(off);
    }
    const auto runs = run_all(configs);
    std::vector<double> with, without;
    int wins = 0;
    for (std::size_t i = 0; i < runs.size(); i += 2) {
        with.push_back(runs[i].final_metric);
        without.push_back(runs[i + 1].final_metric);
        wins += with.back() >= without.back();
    }
    const double secs = seconds_since(t0);
    const bool ok = mean(with) >= kTspAccuracy && wins >= kTspMarginWins && secs < kTspSeconds;
    report(6, ok, "globe TSP(5) with noise margin",
           "mean accuracy " + fmt(mean(with)) + " per seed " + list(with) + ", no margin " + list(without) +
               ", margin >= no margin in " + std::to_string(wins) + "/5, " + fmt(secs, 1) + " s");
}

void criterion7() {
    std::vector<json> configs;
    for (std::uint64_t s = 1; s <= 3; ++s) {
        json j = tsp_config(s);
        j["corruption"]["gradient_noise_sigma"] = 0.25;
        configs.push_back(blackbox(j));
        configs.push_back(j);
    }
    const auto runs = run_all(configs);
    std::vector<double> bb_switch, bb_final, id_switch, id_final;
    for (std::size_t i = 0; i < runs.size(); i += 2) {
        bb_switch.push_back(train_cost_norm(runs[i], 50, 50));
        bb_final.push_back(train_cost_norm(runs[i], 91, 100));
        id_switch.push_back(train_cost_norm(runs[i + 1], 50, 50));
        id_final.push_back(train_cost_norm(runs[i + 1], 91, 100));
    }
    const double bb_ratio = mean(bb_final) / mean(bb_switch);
    const double id_ratio = mean(id_final) / mean(id_switch);
    const bool ok = bb_ratio <= 1.0 - kCollapseDrop && std::abs(id_ratio - 1.0) <= kIdentityBand;
    report(7, ok, "cost collapse under gradient noise",
           "blackbox final/switch-off " + fmt(bb_ratio) + " (switch-off " + list(bb_switch) + ", final " +
               list(bb_final) + "), identity " + fmt(id_ratio) + " (switch-off " + list(id_switch) + ", final " +
               list(id_final) + ")");
}

void criterion8() {
    std::vector<json> configs;
    for (const char* key : {"gradient_noise_sigma", "label_flip_rho"}) {
        for (std::uint64_t s = 1; s <= 5; ++s) {
            json j = tsp_config(s);
            j["corruption"][key] = std::string(key) == "gradient_noise_sigma" ? 0.5 : 1.0;
            configs.push_back(j);
            configs.push_back(blackbox(j));
        }
    }
    const auto runs = run_all(configs);
    std::string detail;
    bool ok = true;
    for (int block = 0; block < 2; ++block) {
        std::vector<double> id, bb;
        int wins = 0;
        for (int s = 0; s < 5; ++s) {
            id.push_back(runs[block * 10 + 2 * s].final_metric);
            bb.push_back(runs[block * 10 + 2 * s + 1].final_metric);
            wins += id.back() >= bb.back();
        }
        ok = ok && wins >= kRobustWins;
        detail += std::string(block ? "; rho=1: " : "sigma=0.5: ") + "identity " + list(id) + " blackbox " + list(bb) +
                  ", identity >= blackbox in " + std::to_string(wins) + "/5";
    }
    report(8, ok, "robustness ordering under corruption", detail);
}

void criterion9() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<json> configs;
    for (std::uint64_t s = 1; s <= 3; ++s) {
        json j = json::parse(R"({
            "task": {"kind": "grid_path", "height": 8, "width": 8, "num_classes": 5, "num_train": 500, "num_test": 100},
            "estimator": {"rule": "identity", "projection": "none"},
            "optimizer": {"kind": "adam", "learning_rate": 0.001, "batch_size": 20},
            "eval_every": 50
        })");
        j["epochs"] = kGridEpochs;
        j["seed"] = s;
        configs.push_back(j);
    }
    const auto runs = run_all(configs);
    std::vector<double> ratios;
    for (const auto& r : runs) ratios.push_back(r.final_metric);
    const double secs = seconds_since(t0);
    report(9, mean(ratios) <= kGridRatio && secs < kGridSeconds, "8x8 shortest path cost ratio",
           "mean " + fmt(mean(ratios), 4) + " per seed " + list(ratios, 4) + " after " + std::to_string(kGridEpochs) +
               " epochs, " + fmt(secs, 1) + " s");
}

void criterion10() {
    const auto r = verify::recall_suite(kRecallInstances, 0);
    report(10, r.ok(), "recall_at_k and recall_loss against permutation oracles", suite_detail(r));
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
