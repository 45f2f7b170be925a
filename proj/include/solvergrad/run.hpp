// run.hpp - execute configured runs and summarise them

#pragma once

#include "solvergrad/config.hpp"
#include "solvergrad/tasks/train.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace solvergrad {

struct RunSummary {
    std::string task;
    std::string metric;
    double final_metric = 0;
    double final_cost_norm = 0;
    double final_loss = 0;
    int epochs_completed = 0;
    std::uint64_t seed = 0;
    bool diverged = false;
    std::vector<tasks::RunRecord> records;
};

// Trains one configured run. Each record is written to `jsonl` (if given) as
// soon as it is produced.
inline RunSummary run_training(const config::RunConfig& cfg, std::ostream* jsonl = nullptr) {
    auto task = config::make_task(cfg);
    RunSummary s;
    s.task = task->name();
    s.metric = task->primary_metric();
    s.seed = cfg.seed;
    s.records = tasks::train(*task, config::train_options(cfg), [&](const tasks::RunRecord& r) {
        if (jsonl) *jsonl << tasks::to_json(r).dump() << '\n';
    });
    for (const auto& r : s.records) {
        if (r.split == "train") {
            s.epochs_completed = r.epoch;
            s.diverged = s.diverged || r.diverged;
        }
        if (r.split == "test") {
            s.final_metric = r.metrics.count(s.metric) ? r.metrics.at(s.metric) : 0.0;
            s.final_cost_norm = r.cost_norm;
            s.final_loss = r.loss;
        }
    }
    return s;
}

inline std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string csv_value(const nlohmann::json& v) {
    if (v.is_string()) return csv_field(v.get<std::string>());
    if (v.is_number_float()) return csv_number(v.get<double>());
    return csv_field(v.dump());
}

inline std::vector<std::string> summary_columns() {
    return {"task", "rule", "projection", "margin", "alpha", "sigma", "rho", "seed",
            "epochs", "metric", "final_metric", "final_cost_norm", "diverged"};
}

inline std::vector<std::string> summary_values(const config::RunConfig& c, const RunSummary& s) {
    return {s.task,
            c.estimator.rule == Rule::blackbox ? "blackbox" : "identity",
            projection_name(c.estimator.projection.kind),
            config::detail::margin_name(c.estimator.margin.kind),
            csv_number(c.estimator.margin.alpha),
            csv_number(c.corruption.gradient_noise_sigma),
            csv_number(c.corruption.label_flip_rho),
            std::to_string(s.seed),
            std::to_string(s.epochs_completed),
            s.metric,
            csv_number(s.final_metric),
            csv_number(s.final_cost_norm),
            s.diverged ? "true" : "false"};
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    return out;
}

}  // namespace solvergrad
