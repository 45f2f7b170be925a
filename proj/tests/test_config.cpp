#include <solvergrad/config.hpp>
#include <solvergrad/run.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <set>

using namespace solvergrad;
using namespace solvergrad::config;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({
        "task": {"kind": "globe_tsp", "num_entities": 12, "k": 5, "num_train": 20, "num_test": 10},
        "estimator": {"rule": "identity", "projection": "std", "margin": {"kind": "noise", "alpha": 0.1}},
        "corruption": {"margin_end": 2},
        "epochs": 3,
        "seed": 4
    })");
}

std::string error_field(const json& j) {
    try {
        parse_run_config(j);
    } catch (const config_error& e) {
        return e.field;
    }
    return "<accepted>";
}

TEST(Config, RoundTripIsIdentity) {
    for (const char* file : {"globe_tsp.json", "grid_path.json", "topk_explain.json", "ranking_retrieval.json"}) {
        const json raw = load_json_file(std::string(SOLVERGRAD_SOURCE_DIR) + "/configs/" + file);
        const json once = to_json(parse_run_config(raw));
        const json twice = to_json(parse_run_config(once));
        EXPECT_EQ(once, twice) << file;
    }
    EXPECT_EQ(to_json(parse_run_config(to_json(parse_run_config(minimal())))), to_json(parse_run_config(minimal())));
}

TEST(Config, MissingRuleNamesTheField) {
    json j = minimal();
    j["estimator"].erase("rule");
    EXPECT_EQ(error_field(j), "estimator.rule");
    try {
        parse_run_config(j);
    } catch (const config_error& e) {
        EXPECT_NE(std::string(e.what()).find("estimator.rule"), std::string::npos);
    }
}

TEST(Config, UnknownKeysRejected) {
    json j = minimal();
    j["estimator"]["temperature"] = 1.0;
    EXPECT_EQ(error_field(j), "estimator.temperature");
    j = minimal();
    j["bogus"] = 1;
    EXPECT_EQ(error_field(j), "bogus");
    j = minimal();
    j["task"]["height"] = 4;  // belongs to grid_path only
    EXPECT_EQ(error_field(j), "task.height");
}

TEST(Config, TypeAndRangeErrors) {
    json j = minimal();
    j["estimator"]["rule"] = "straight_through";
    EXPECT_EQ(error_field(j), "estimator.rule");
    j = minimal();
    j["estimator"]["rule"] = "blackbox";
    j["estimator"]["lambda"] = 0;
    EXPECT_EQ(error_field(j), "estimator.lambda");
    j = minimal();
    j["corruption"]["gradient_noise_sigma"] = -1;
    EXPECT_EQ(error_field(j), "corruption.gradient_noise_sigma");
    j = minimal();
    j["epochs"] = "ten";
    EXPECT_EQ(error_field(j), "epochs");
    j = minimal();
    j["corruption"]["margin_end"] = 50;
    EXPECT_EQ(error_field(j), "corruption.margin_end");
    j = minimal();
    j["task"]["kind"] = "knapsack";
    EXPECT_EQ(error_field(j), "task.kind");
}

TEST(Config, PublishedSchemaMatches) {
    const json file = load_json_file(std::string(SOLVERGRAD_SOURCE_DIR) + "/schema/run_config.schema.json");
    EXPECT_EQ(file, run_config_schema());
}

TEST(Sweep, GridTimesReplicates) {
    json j = minimal();
    j["sweep"] = json::parse(R"({"axes": {"estimator.margin.alpha": [0, 0.1], "estimator.projection": ["none", "std"]},
                                  "replicates": 3})");
    const SweepPlan plan = expand_sweep(j);
    ASSERT_EQ(plan.runs.size(), 12u);
    EXPECT_EQ(plan.axes[0].column, "alpha");
    EXPECT_EQ(plan.axes[1].column, "projection");
    std::set<std::string> distinct;
    for (const auto& r : plan.runs) {
        distinct.insert(r.config.dump());
        EXPECT_FALSE(r.config.contains("sweep"));
        EXPECT_EQ(r.config["seed"], replicate_seed(4, r.replicate));
    }
    EXPECT_EQ(distinct.size(), 12u);
    // Runs at the same replicate share their seed across grid points.
    EXPECT_EQ(plan.runs[0].config["seed"], plan.runs[3].config["seed"]);
}

TEST(Sweep, EmptyGridIsOneRun) {
    json j = minimal();
    EXPECT_EQ(expand_sweep(j).runs.size(), 1u);
    j["sweep"] = json::object();
    EXPECT_EQ(expand_sweep(j).runs.size(), 1u);
}

TEST(Sweep, CapExceededReportsCount) {
    json j = minimal();
    j["sweep"] = json::parse(R"({"axes": {"seed": [1, 2, 3, 4, 5]}, "replicates": 2, "max_runs": 8})");
    try {
        expand_sweep(j);
        FAIL() << "cap not enforced";
    } catch (const config_error& e) {
        EXPECT_NE(std::string(e.what()).find("10"), std::string::npos);
    }
}

TEST(Sweep, InvalidAxisValueIsRejected) {
    json j = minimal();
    j["sweep"] = json::parse(R"({"axes": {"estimator.projection": ["std", "cube"]}})");
    EXPECT_THROW(expand_sweep(j), std::invalid_argument);
}

TEST(Run, TrainingIsDeterministicAndSummarised) {
    const RunConfig c = parse_run_config(minimal());
    std::ostringstream a, b;
    const RunSummary s = run_training(c, &a);
    run_training(c, &b);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(s.epochs_completed, 3);
    EXPECT_EQ(s.metric, "accuracy");
    EXPECT_EQ(summary_columns().size(), summary_values(c, s).size());
    std::size_t lines = 0;
    std::istringstream in(a.str());
    for (std::string line; std::getline(in, line); ++lines) EXPECT_NO_THROW(json::parse(line));
    EXPECT_EQ(lines, 6u);  // one train and one test record per epoch
}

TEST(Run, CsvQuoting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

}  // namespace
