// solvergrad - verification suites, training runs and sweeps

#include "solvergrad/config.hpp"
#include "solvergrad/run.hpp"
#include "solvergrad/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace solvergrad;

namespace {

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Outputs are never overwritten: an existing file is an error.
std::ofstream create_new(const fs::path& path) {
    if (fs::exists(path)) throw std::runtime_error("refusing to overwrite existing output " + path.string());
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot create " + path.string());
    return out;
}

int cmd_verify(const std::string& suite, const std::string& out, std::optional<std::uint64_t> seed) {
    std::vector<std::string> names;
    if (suite == "all") {
        names = verify::suite_names();
    } else {
        names.push_back(suite);
    }
    json reports = json::array();
    bool ok = true;
    for (const auto& name : names) {
        const verify::SuiteReport r = verify::run_suite(name, seed.value_or(0));
        std::cout << (r.ok() ? "PASS " : "FAIL ") << r.suite << " " << r.passed << "/" << r.instances << " ("
                  << r.seconds << " s)\n";
        ok = ok && r.ok();
        reports.push_back(verify::to_json(r));
    }
    json doc = {{"suites", reports}, {"passed", ok}, {"seed", seed.value_or(0)}};
    if (!out.empty()) {
        create_new(out) << doc.dump(2) << '\n';
    } else {
        std::cout << doc.dump(2) << '\n';
    }
    return ok ? 0 : 1;
}

json read_config(const std::string& path) { return config::load_json_file(path); }

int cmd_train(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed) {
    json j = read_config(config_path);
    if (j.contains("sweep")) throw config::config_error("sweep", "train runs a single config, use the sweep subcommand");
    if (seed) j["seed"] = *seed;
    const config::RunConfig cfg = config::parse_run_config(j);
    const fs::path dir(out);
    create_new(dir / "config.json") << config::to_json(cfg).dump(2) << '\n';
    std::ofstream records = create_new(dir / "records.jsonl");
    const RunSummary s = run_training(cfg, &records);
    std::ofstream summary = create_new(dir / "summary.csv");
    summary << csv_row(summary_columns()) << '\n' << csv_row(summary_values(cfg, s)) << '\n';
    std::cout << s.task << " " << s.metric << "=" << s.final_metric << " cost_norm=" << s.final_cost_norm
              << (s.diverged ? " (diverged)" : "") << '\n';
    return s.diverged ? 1 : 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
              std::size_t jobs) {
    const json j = read_config(config_path);
    const config::SweepPlan plan = config::expand_sweep(j, seed);
    const fs::path dir(out);
    json listing = json::array();
    for (const auto& r : plan.runs) listing.push_back({{"index", r.index}, {"replicate", r.replicate}, {"config", r.config}});
    create_new(dir / "plan.json") << listing.dump(2) << '\n';

    std::vector<RunSummary> summaries(plan.runs.size());
    std::vector<config::RunConfig> configs;
    for (const auto& r : plan.runs) configs.push_back(config::parse_run_config(r.config));
    std::vector<std::ofstream> files;
    for (const auto& r : plan.runs) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%04zu.jsonl", r.index);
        files.push_back(create_new(dir / "runs" / name));
    }

    std::atomic<std::size_t> next{0};
    std::mutex log;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next++;
            if (i >= plan.runs.size()) return;
            try {
                summaries[i] = run_training(configs[i], &files[i]);
                files[i].close();
                std::lock_guard lock(log);
                std::cout << "run " << i << " " << summaries[i].metric << "=" << summaries[i].final_metric << '\n';
            } catch (...) {
                std::lock_guard lock(log);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, plan.runs.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::vector<std::string> header;
    for (const auto& a : plan.axes) header.push_back(a.column);
    header.push_back("replicate");
    const auto base = summary_columns();
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < base.size(); ++c) {
        if (std::find(header.begin(), header.end(), base[c]) != header.end()) continue;
        header.push_back(base[c]);
        keep.push_back(c);
    }
    std::ofstream csv = create_new(dir / "summary.csv");
    csv << csv_row(header) << '\n';
    bool diverged = false;
    for (std::size_t i = 0; i < plan.runs.size(); ++i) {
        std::vector<std::string> row;
        for (const auto& v : plan.runs[i].coordinates) row.push_back(csv_value(v));
        row.push_back(std::to_string(plan.runs[i].replicate));
        const auto values = summary_values(configs[i], summaries[i]);
        for (std::size_t c : keep) row.push_back(values[c]);
        csv << csv_row(row) << '\n';
        diverged = diverged || summaries[i].diverged;
    }
    std::cout << plan.runs.size() << " runs, summary in " << (dir / "summary.csv").string() << '\n';
    return diverged ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentiable combinatorial solver layers: verification, training and sweeps"};
    app.require_subcommand(1);

    std::string suite = "all", config_path, out;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;

    std::vector<std::string> suites{"all"};
    for (const auto& n : verify::suite_names()) suites.push_back(n);

    auto* verify_cmd = app.add_subcommand("verify", "Run property suites and write a JSON report");
    verify_cmd->add_option("--suite", suite, "Suite to run")->check(CLI::IsMember(suites));
    verify_cmd->add_option("--out", out, "Report path (JSON); printed to stdout when omitted");
    verify_cmd->add_option("--seed", seed, "Seed for instance generation");

    auto* train_cmd = app.add_subcommand("train", "Train one configured run");
    train_cmd->add_option("--config", config_path, "Run config (JSON)")->required();
    train_cmd->add_option("--out", out, "Output directory")->required();
    train_cmd->add_option("--seed", seed, "Override the config seed");

    auto* sweep_cmd = app.add_subcommand("sweep", "Run every point of a config grid");
    sweep_cmd->add_option("--config", config_path, "Run config with a sweep block (JSON)")->required();
    sweep_cmd->add_option("--out", out, "Output directory")->required();
    sweep_cmd->add_option("--seed", seed, "Master seed (overrides the config seed)");
    sweep_cmd->add_option("--jobs", jobs, "Runs executed in parallel")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0) std::cerr << app.help();
        return app.exit(e);
    }

    try {
        if (*verify_cmd) return cmd_verify(suite, out, seed);
        if (*train_cmd) return cmd_train(config_path, out, seed);
        return cmd_sweep(config_path, out, seed, jobs);
    } catch (const config::config_error& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
