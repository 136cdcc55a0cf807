// Command-line experiment runner: JSON configs in, CSV/JSON results out.
//
// Subcommands:
//   train            one deterministic training run per configured seed
//   budget-sweep     granularity sweep at a fixed memory budget
//   compare          several optimizers on one problem, aligned loss columns
//   precision-sweep  bf16 projection error across granularities
//   validate         the reference statistical/dynamical check battery

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vlorp/vlorp.hpp"

namespace {

using nlohmann::json;
using namespace vlorp;

harness::ExperimentConfig load_config(const std::string& path,
                                      const std::string& out_override,
                                      std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    harness::ExperimentConfig cfg = harness::parse_config(j);
    if (!out_override.empty()) cfg.out = out_override;
    if (seed_override) cfg.run.seeds = {*seed_override};
    harness::validate_config(cfg);
    return cfg;
}

std::string seed_suffixed(const std::string& path, std::uint64_t seed) {
    const std::size_t dot = path.rfind('.');
    if (dot == std::string::npos) return path + "_seed" + std::to_string(seed);
    return path.substr(0, dot) + "_seed" + std::to_string(seed) + path.substr(dot);
}

int cmd_train(const harness::ExperimentConfig& cfg) {
    for (std::size_t i = 0; i < cfg.run.seeds.size(); ++i) {
        const std::uint64_t seed = cfg.run.seeds[i];
        const harness::TrainResult result = harness::train(cfg, seed);
        const std::string path = cfg.run.seeds.size() == 1
                                     ? cfg.out
                                     : seed_suffixed(cfg.out, seed);
        harness::write_run_csv(path, result.records);
        harness::write_metadata(path, harness::to_json(cfg),
                                json{{"seed", seed},
                                     {"final_loss", result.final_loss},
                                     {"state_elems", result.state_elems},
                                     {"pg_elems", result.pg_elems}});
        std::printf("wrote %s (%zu records, final loss %.6g)\n", path.c_str(),
                    result.records.size(), result.final_loss);
    }
    return 0;
}

int cmd_budget_sweep(const harness::ExperimentConfig& cfg, double budget,
                     const std::vector<int>& log2_c_list) {
    const auto rows = harness::budget_sweep(cfg, budget, log2_c_list);
    harness::write_sweep_csv(cfg.out, rows);
    json extra;
    extra["memory_budget"] = budget;
    extra["log2_c_list"] = log2_c_list;
    harness::write_metadata(cfg.out, harness::to_json(cfg), extra);
    for (const auto& row : rows)
        std::printf("log2_c=%+d rank=%lld final_loss=%.6g tail_mean=%.6g state=%lld pg=%lld\n",
                    row.log2_c, static_cast<long long>(row.rank), row.final_loss,
                    row.tail_mean_loss, static_cast<long long>(row.state_elems),
                    static_cast<long long>(row.pg_elems));
    return 0;
}

int cmd_compare(const harness::ExperimentConfig& cfg, const std::vector<std::string>& names) {
    for (const std::string& name : names) optimizer_kind_from_name(name);
    const auto columns = harness::compare_optimizers(cfg, names);
    harness::write_compare_csv(cfg.out, names, columns);
    harness::write_metadata(cfg.out, harness::to_json(cfg), json{{"optimizers", names}});
    std::printf("wrote %s\n", cfg.out.c_str());
    return 0;
}

int cmd_precision_sweep(double budget, const std::vector<int>& log2_c_list,
                        const std::string& out) {
    const std::vector<Matrix> corpus = harness::reference_bf16_corpus();
    ProjectionSpec base;
    base.base_seed = 67;
    const auto rows = precision::delta_sweep(corpus, base, budget, log2_c_list);
    harness::write_delta_csv(out, rows);
    json cfg;
    cfg["memory_budget"] = budget;
    cfg["log2_c_list"] = log2_c_list;
    cfg["corpus"] = {{"matrices", corpus.size()},
                     {"rows", corpus.front().rows()},
                     {"cols", corpus.front().cols()}};
    harness::write_metadata(out, cfg);
    for (const auto& row : rows)
        std::printf("log2_c=%+d r=%lld delta=%.6g normalized=%.4f\n", row.log2_c,
                    static_cast<long long>(row.rank), row.delta, row.delta_normalized);
    return 0;
}

int cmd_validate(const std::vector<std::string>& suites, const std::string& out) {
    const auto results = harness::run_validation_battery(suites);
    json report = json::array();
    bool all_pass = true;
    for (const auto& r : results) {
        std::printf("[%s] %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str());
        report.push_back(json{{"name", r.name}, {"pass", r.pass}, {"details", r.details}});
        all_pass = all_pass && r.pass;
    }
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) throw Error("cannot open output file: " + out);
        f << json{{"suites", report}, {"pass", all_pass}}.dump(2) << '\n';
    }
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Granularity-adjustable low-rank gradient projection experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed_override;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", config_path, "JSON experiment config");
        if (config_required) c->required();
        sub->add_option("--out", out_path, "output path (overrides config)");
        sub->add_option("--seed-override", seed_override,
                        "replace the config seed list with one seed");
    };

    auto* train = app.add_subcommand("train", "run one experiment and write a run CSV");
    add_common(train, true);

    double budget = 16.0;
    std::vector<int> log2_c_list;
    auto* sweep = app.add_subcommand("budget-sweep",
                                     "sweep granularities at a fixed memory budget");
    add_common(sweep, true);
    sweep->add_option("--budget", budget, "memory budget M = c * r")->required();
    sweep->add_option("--log2-c", log2_c_list, "log2(c) values to sweep")->required();

    std::vector<std::string> optimizers = {"adam", "adafactor", "ss", "os", "projfactor"};
    auto* compare = app.add_subcommand("compare", "aligned loss columns per optimizer");
    add_common(compare, true);
    compare->add_option("--optimizers", optimizers, "optimizer names to compare");

    double prec_budget = 64.0;
    std::vector<int> prec_list = {-2, -1, 0, 1, 2, 3, 4, 5, 6};
    auto* prec = app.add_subcommand("precision-sweep",
                                    "bf16 projection error across granularities");
    prec->add_option("--budget", prec_budget, "memory budget M = c * r");
    prec->add_option("--log2-c", prec_list, "log2(c) values to sweep");
    prec->add_option("--out", out_path, "output CSV path");

    std::vector<std::string> suites;
    auto* validate = app.add_subcommand("validate", "run the reference check battery");
    validate->add_option("suites", suites,
                         "subset of: unbiased variance lemma-c1 sgd-bound lyapunov bf16-sweep");
    validate->add_option("--out", out_path, "JSON report path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            auto cfg = load_config(config_path, out_path, seed_override);
            if (cfg.out.empty()) throw ConfigError("no output path (--out or config \"out\")");
            return cmd_train(cfg);
        }
        if (sweep->parsed()) {
            auto cfg = load_config(config_path, out_path, seed_override);
            if (cfg.out.empty()) throw ConfigError("no output path (--out or config \"out\")");
            cfg.memory_budget.reset(); // per-cell budgets are set by the sweep
            return cmd_budget_sweep(cfg, budget, log2_c_list);
        }
        if (compare->parsed()) {
            auto cfg = load_config(config_path, out_path, seed_override);
            if (cfg.out.empty()) throw ConfigError("no output path (--out or config \"out\")");
            return cmd_compare(cfg, optimizers);
        }
        if (prec->parsed()) {
            if (out_path.empty()) throw ConfigError("precision-sweep needs --out");
            return cmd_precision_sweep(prec_budget, prec_list, out_path);
        }
        if (validate->parsed()) return cmd_validate(suites, out_path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
