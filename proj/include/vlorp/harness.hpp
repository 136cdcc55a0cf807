#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlorp/matrix.hpp"
#include "vlorp/models.hpp"
#include "vlorp/optim.hpp"
#include "vlorp/precision.hpp"
#include "vlorp/projection.hpp"
#include "vlorp/validate.hpp"

namespace vlorp::harness {

using nlohmann::json;

struct ProblemConfig {
    std::string kind = "quadratic"; // quadratic | logistic | mlp
    index_t n = 16, m = 16;         // quadratic
    double cond = 10.0;
    index_t features = 64, samples = 512; // logistic / mlp sample count
    std::vector<index_t> sizes;           // mlp
    std::uint64_t seed = 1;
};

struct OptimizerConfig {
    std::string name = "projfactor";
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct RunSpecConfig {
    index_t steps = 100;
    index_t accumulation = 1;
    index_t warmup = 10;
    std::vector<std::uint64_t> seeds = {1};
};

struct ExperimentConfig {
    ProblemConfig problem;
    OptimizerConfig optimizer;
    ProjectionSpec projection; // base_seed is derived per run seed
    EpochStatePolicy epoch_state_policy = EpochStatePolicy::Retain;
    RunSpecConfig run;
    std::optional<double> memory_budget;
    std::string out;
};

inline Distribution distribution_from_name(const std::string& name) {
    if (name == "normal") return Distribution::Normal;
    if (name == "rademacher") return Distribution::Rademacher;
    throw ConfigError("unknown distribution: " + name);
}

inline std::string distribution_name(Distribution d) {
    return d == Distribution::Normal ? "normal" : "rademacher";
}

inline EpochStatePolicy policy_from_name(const std::string& name) {
    if (name == "retain") return EpochStatePolicy::Retain;
    if (name == "reset") return EpochStatePolicy::Reset;
    throw ConfigError("unknown epoch_state_policy: " + name);
}

inline std::string policy_name(EpochStatePolicy p) {
    return p == EpochStatePolicy::Retain ? "retain" : "reset";
}

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    try {
        if (j.contains("problem")) {
            const json& p = j.at("problem");
            cfg.problem.kind = p.value("kind", cfg.problem.kind);
            cfg.problem.n = p.value("n", cfg.problem.n);
            cfg.problem.m = p.value("m", cfg.problem.m);
            cfg.problem.cond = p.value("cond", cfg.problem.cond);
            cfg.problem.features = p.value("features", cfg.problem.features);
            cfg.problem.samples = p.value("samples", cfg.problem.samples);
            cfg.problem.sizes = p.value("sizes", cfg.problem.sizes);
            cfg.problem.seed = p.value("seed", cfg.problem.seed);
        }
        if (j.contains("optimizer")) {
            const json& o = j.at("optimizer");
            cfg.optimizer.name = o.value("name", cfg.optimizer.name);
            cfg.optimizer.lr = o.value("lr", cfg.optimizer.lr);
            cfg.optimizer.beta1 = o.value("beta1", cfg.optimizer.beta1);
            cfg.optimizer.beta2 = o.value("beta2", cfg.optimizer.beta2);
            cfg.optimizer.epsilon = o.value("epsilon", cfg.optimizer.epsilon);
        }
        if (j.contains("projection")) {
            const json& pr = j.at("projection");
            cfg.projection.log2_c = pr.value("log2_c", cfg.projection.log2_c);
            cfg.projection.rank = pr.value("rank", cfg.projection.rank);
            cfg.projection.tau = pr.value("tau", cfg.projection.tau);
            cfg.projection.gamma = pr.value("gamma", cfg.projection.gamma);
            cfg.projection.distribution =
                distribution_from_name(pr.value("distribution", std::string("normal")));
            cfg.epoch_state_policy =
                policy_from_name(pr.value("epoch_state_policy", std::string("retain")));
        }
        if (j.contains("run")) {
            const json& r = j.at("run");
            cfg.run.steps = r.value("steps", cfg.run.steps);
            cfg.run.accumulation = r.value("accumulation", cfg.run.accumulation);
            cfg.run.warmup = r.value("warmup", cfg.run.warmup);
            cfg.run.seeds = r.value("seeds", cfg.run.seeds);
        }
        if (j.contains("memory_budget"))
            cfg.memory_budget = j.at("memory_budget").get<double>();
        cfg.out = j.value("out", cfg.out);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return cfg;
}

inline json to_json(const ExperimentConfig& cfg) {
    json j;
    j["problem"] = {{"kind", cfg.problem.kind}, {"n", cfg.problem.n},
                    {"m", cfg.problem.m},       {"cond", cfg.problem.cond},
                    {"features", cfg.problem.features}, {"samples", cfg.problem.samples},
                    {"sizes", cfg.problem.sizes}, {"seed", cfg.problem.seed}};
    j["optimizer"] = {{"name", cfg.optimizer.name}, {"lr", cfg.optimizer.lr},
                      {"beta1", cfg.optimizer.beta1}, {"beta2", cfg.optimizer.beta2},
                      {"epsilon", cfg.optimizer.epsilon}};
    j["projection"] = {{"log2_c", cfg.projection.log2_c},
                       {"rank", cfg.projection.rank},
                       {"tau", cfg.projection.tau},
                       {"gamma", cfg.projection.gamma},
                       {"distribution", distribution_name(cfg.projection.distribution)},
                       {"epoch_state_policy", policy_name(cfg.epoch_state_policy)}};
    j["run"] = {{"steps", cfg.run.steps}, {"accumulation", cfg.run.accumulation},
                {"warmup", cfg.run.warmup}, {"seeds", cfg.run.seeds}};
    if (cfg.memory_budget) j["memory_budget"] = *cfg.memory_budget;
    if (!cfg.out.empty()) j["out"] = cfg.out;
    return j;
}

inline models::Problem make_problem(const ProblemConfig& cfg) {
    if (cfg.kind == "quadratic")
        return models::make_quadratic(cfg.n, cfg.m, cfg.cond, cfg.seed);
    if (cfg.kind == "logistic")
        return models::make_logistic(cfg.features, cfg.samples, cfg.seed);
    if (cfg.kind == "mlp") {
        if (cfg.sizes.size() < 2)
            throw ConfigError("mlp problem needs a sizes list");
        return models::make_mlp(cfg.sizes, cfg.samples, cfg.seed);
    }
    throw ConfigError("unknown problem kind: " + cfg.kind);
}

inline void validate_config(const ExperimentConfig& cfg) {
    optimizer_kind_from_name(cfg.optimizer.name); // throws on unknown name
    if (cfg.run.steps < 0) throw ConfigError("steps must be >= 0");
    if (cfg.run.accumulation < 1) throw ConfigError("accumulation must be >= 1");
    if (cfg.run.warmup < 0) throw ConfigError("warmup must be >= 0");
    if (cfg.run.seeds.empty()) throw ConfigError("seeds list must be nonempty");
    if (cfg.projection.rank < 1) throw ConfigError("rank must be >= 1");
    if (cfg.projection.tau < 1) throw ConfigError("tau must be >= 1");
    if (cfg.optimizer.lr <= 0.0) throw ConfigError("lr must be positive");
    if (cfg.optimizer.beta1 < 0.0 || cfg.optimizer.beta1 >= 1.0 ||
        cfg.optimizer.beta2 < 0.0 || cfg.optimizer.beta2 >= 1.0)
        throw ConfigError("betas must lie in [0, 1)");
    if (cfg.optimizer.epsilon <= 0.0) throw ConfigError("epsilon must be positive");
    if (cfg.memory_budget &&
        *cfg.memory_budget != cfg.projection.memory_budget())
        throw ConfigError("memory_budget does not equal c * rank");
    if (cfg.problem.kind != "quadratic" && cfg.run.accumulation > 1 &&
        cfg.problem.samples % cfg.run.accumulation != 0)
        throw ConfigError("accumulation must divide the sample count");
    make_problem(cfg.problem); // validates problem dimensions
}

struct RunRecord {
    index_t step = 0;
    double loss = 0.0;
    double grad_norm_sq = 0.0;
    std::optional<double> hamiltonian;
    double wall_ms = 0.0;
};

struct TrainResult {
    std::vector<RunRecord> records;
    double final_loss = 0.0;
    index_t state_elems = 0;
    index_t pg_elems = 0;
    std::vector<Matrix> final_params;
};

namespace detail {

/// Per-parameter training lane. A projected optimizer falls back to its
/// full-gradient counterpart when the parameter shape fails the granularity
/// divisibility check.
struct ParameterLane {
    OptimizerKind kind;
    bool projected = false;
    ProjectionSpec spec;
    index_t last_epoch = -1;
    Projection proj{Matrix(1, 1), -1, {}};
    SchemeState scheme;
    ProjFactorState factored;
    AdamState adam;
    AdafactorState adafactor;
};

inline OptimizerKind fallback_kind(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::Sgd: return OptimizerKind::Sgd;
        case OptimizerKind::ProjFactor: return OptimizerKind::Adafactor;
        default: return OptimizerKind::Adam;
    }
}

inline ParameterLane make_lane(OptimizerKind kind, const ProjectionSpec& spec,
                               index_t n, index_t m, bool warn) {
    ParameterLane lane;
    lane.spec = spec;
    lane.projected = is_projected(kind) && spec.divides(n, m);
    lane.kind = lane.projected ? kind : (is_projected(kind) ? fallback_kind(kind) : kind);
    if (is_projected(kind) && !lane.projected && warn)
        std::fprintf(stderr,
                     "warning: parameter %lld x %lld fails divisibility for log2_c=%d; "
                     "training it without projection (%s)\n",
                     static_cast<long long>(n), static_cast<long long>(m), spec.log2_c,
                     optimizer_name(lane.kind).c_str());
    switch (lane.kind) {
        case OptimizerKind::SsAdam: lane.scheme = make_ss_state(spec, n, m); break;
        case OptimizerKind::OsAdam: lane.scheme = make_os_state(spec, n, m); break;
        case OptimizerKind::ProjFactor: lane.factored = make_projfactor_state(spec, n, m); break;
        case OptimizerKind::Adam: lane.adam = make_adam_state(n, m); break;
        case OptimizerKind::Adafactor: lane.adafactor = make_adafactor_state(n, m); break;
        case OptimizerKind::Sgd: break;
    }
    return lane;
}

} // namespace detail

/// Deterministic training loop: K substeps of projected (or full) gradient
/// accumulation per update, linear warm-up of the learning rate, one record
/// per update step. Loss and grad_norm_sq are full-data values at the
/// pre-update iterate; the hamiltonian column (factored optimizer only) is
/// evaluated just after the update. wall_ms is timing metadata and is
/// excluded from the determinism contract.
inline TrainResult train(const ExperimentConfig& cfg, std::uint64_t run_seed) {
    validate_config(cfg);
    const models::Problem problem = make_problem(cfg.problem);
    const OptimizerKind kind = optimizer_kind_from_name(cfg.optimizer.name);
    const index_t k_substeps = cfg.run.accumulation;

    std::vector<Matrix> params = problem.init(mix_seed(run_seed, 0x696E6974ULL));

    ProjectionSpec base_spec = cfg.projection;
    base_spec.base_seed = mix_seed(run_seed, 0x70726F6AULL);

    std::vector<detail::ParameterLane> lanes;
    for (std::size_t p = 0; p < params.size(); ++p)
        lanes.push_back(detail::make_lane(kind, base_spec.for_parameter(p),
                                          params[p].rows(), params[p].cols(), true));

    AdamOptions opt{cfg.optimizer.lr, cfg.optimizer.beta1, cfg.optimizer.beta2,
                    cfg.optimizer.epsilon, false};

    TrainResult result;
    for (std::size_t p = 0; p < lanes.size(); ++p) {
        const Matrix& w = params[p];
        result.state_elems +=
            state_element_count(lanes[p].kind, w.rows(), w.cols(), lanes[p].spec);
        if (lanes[p].projected)
            result.pg_elems += projected_gradient_elements(w.rows(), lanes[p].spec);
    }

    for (index_t t = 0; t < cfg.run.steps; ++t) {
        const auto t0 = std::chrono::steady_clock::now();
        const double warm_scale =
            cfg.run.warmup > 0
                ? std::min(1.0, static_cast<double>(t + 1) / static_cast<double>(cfg.run.warmup))
                : 1.0;
        AdamOptions step_opt = opt;
        step_opt.lr = opt.lr * warm_scale;

        RunRecord record;
        record.step = t;
        record.loss = problem.loss(params);
        double grad_norm_sq = 0.0;

        // Refresh projections at epoch boundaries and apply the state policy.
        for (std::size_t p = 0; p < lanes.size(); ++p) {
            detail::ParameterLane& lane = lanes[p];
            if (!lane.projected) continue;
            const index_t epoch = epoch_of(lane.spec, t);
            if (epoch != lane.last_epoch) {
                lane.proj = make_projection(lane.spec, params[p].rows(), params[p].cols(), t);
                if (lane.last_epoch >= 0) {
                    if (lane.kind == OptimizerKind::SsAdam)
                        on_epoch_change(lane.scheme, true, cfg.epoch_state_policy);
                    else if (lane.kind == OptimizerKind::ProjFactor)
                        on_epoch_change(lane.factored, cfg.epoch_state_policy);
                }
                lane.last_epoch = epoch;
            }
        }

        // Accumulate K substep gradients (projected lanes store the subspace
        // form, full lanes the mean gradient).
        std::vector<std::optional<ProjectedGradient>> acc_pg(lanes.size());
        std::vector<Matrix> acc_full(lanes.size());
        const double inv_k = 1.0 / static_cast<double>(k_substeps);
        for (index_t i = 0; i < k_substeps; ++i) {
            const std::vector<Matrix> grads =
                problem.batch_grad(params, i % k_substeps, k_substeps);
            for (std::size_t p = 0; p < lanes.size(); ++p) {
                if (lanes[p].projected) {
                    ProjectedGradient piece = project(inv_k * grads[p], lanes[p].proj);
                    if (acc_pg[p]) *acc_pg[p] += piece;
                    else acc_pg[p] = std::move(piece);
                } else {
                    if (acc_full[p].size() == 0) acc_full[p] = inv_k * grads[p];
                    else acc_full[p] += inv_k * grads[p];
                }
            }
        }

        {
            const std::vector<Matrix> full = problem.grad(params);
            for (const Matrix& g : full) grad_norm_sq += frobenius_norm_sq(g);
        }
        record.grad_norm_sq = grad_norm_sq;

        for (std::size_t p = 0; p < lanes.size(); ++p) {
            detail::ParameterLane& lane = lanes[p];
            Matrix& w = params[p];
            switch (lane.kind) {
                case OptimizerKind::Sgd:
                    if (lane.projected) sgd_step(w, *acc_pg[p], lane.proj, step_opt.lr);
                    else w -= step_opt.lr * acc_full[p];
                    break;
                case OptimizerKind::SsAdam:
                    ss_adam_step(lane.scheme, *acc_pg[p], lane.proj, w, step_opt);
                    break;
                case OptimizerKind::OsAdam:
                    os_adam_step(lane.scheme, *acc_pg[p], lane.proj, w, step_opt);
                    break;
                case OptimizerKind::ProjFactor:
                    projfactor_step(lane.factored, *acc_pg[p], lane.proj, w, step_opt);
                    break;
                case OptimizerKind::Adam:
                    adam_step(lane.adam, acc_full[p], w, step_opt);
                    break;
                case OptimizerKind::Adafactor:
                    adafactor_step(lane.adafactor, acc_full[p], w, step_opt);
                    break;
            }
        }

        if (kind == OptimizerKind::ProjFactor) {
            double h = problem.loss(params);
            for (const auto& lane : lanes)
                if (lane.projected)
                    h += validate::kinetic_energy(lane.factored, lane.proj, 1.0 - opt.beta1);
            record.hamiltonian = h;
        }

        record.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        result.records.push_back(std::move(record));
    }

    result.final_loss = problem.loss(params);
    result.final_params = std::move(params);
    return result;
}

namespace detail {

inline std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline void write_run_csv(const std::string& path, std::span<const RunRecord> records) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file: " + path);
    out << "step,loss,grad_norm_sq,hamiltonian,wall_ms\n";
    for (const RunRecord& r : records) {
        out << r.step << ',' << detail::format_full(r.loss) << ','
            << detail::format_full(r.grad_norm_sq) << ',';
        if (r.hamiltonian) out << detail::format_full(*r.hamiltonian);
        out << ',' << detail::format_full(r.wall_ms) << '\n';
    }
}

/// Sidecar with the full resolved config; timestamps live here, never in
/// the data columns.
inline void write_metadata(const std::string& csv_path, const json& resolved_config,
                           const json& extra = json::object()) {
    json meta;
    meta["config"] = resolved_config;
    meta["created_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
    std::ofstream out(csv_path + ".meta.json");
    if (!out) throw Error("cannot open metadata file: " + csv_path + ".meta.json");
    out << meta.dump(2) << '\n';
}

struct SweepRow {
    int log2_c = 0;
    index_t rank = 0;
    double final_loss = 0.0;
    double tail_mean_loss = 0.0;
    index_t state_elems = 0;
    index_t pg_elems = 0;
};

/// One training run per granularity at fixed memory budget; rank = M / c.
inline std::vector<SweepRow> budget_sweep(const ExperimentConfig& base, double memory_budget,
                                          std::span<const int> log2_c_list) {
    std::vector<SweepRow> rows;
    for (int log2_c : log2_c_list) {
        ExperimentConfig cfg = base;
        cfg.projection.log2_c = log2_c;
        const double rank = std::ldexp(memory_budget, -log2_c);
        if (rank < 1.0 || rank != std::floor(rank))
            throw ConfigError("memory budget / c is not a positive integer for log2_c=" +
                              std::to_string(log2_c));
        cfg.projection.rank = static_cast<index_t>(rank);
        cfg.memory_budget = memory_budget;
        const TrainResult result = train(cfg, cfg.run.seeds.at(0));

        SweepRow row;
        row.log2_c = log2_c;
        row.rank = cfg.projection.rank;
        row.final_loss = result.final_loss;
        const std::size_t tail =
            std::min<std::size_t>(10, result.records.size());
        double acc = 0.0;
        for (std::size_t i = result.records.size() - tail; i < result.records.size(); ++i)
            acc += result.records[i].loss;
        row.tail_mean_loss = tail > 0 ? acc / static_cast<double>(tail) : result.final_loss;
        row.state_elems = result.state_elems;
        row.pg_elems = result.pg_elems;
        rows.push_back(row);
    }
    return rows;
}

inline void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file: " + path);
    out << "log2_c,rank,final_loss,tail_mean_loss,state_elems,pg_elems\n";
    for (const SweepRow& r : rows)
        out << r.log2_c << ',' << r.rank << ',' << detail::format_full(r.final_loss) << ','
            << detail::format_full(r.tail_mean_loss) << ',' << r.state_elems << ','
            << r.pg_elems << '\n';
}

/// Loss trajectories of several optimizers on one problem, aligned by step.
inline std::vector<std::vector<double>> compare_optimizers(
    const ExperimentConfig& base, std::span<const std::string> names) {
    std::vector<std::vector<double>> columns;
    for (const std::string& name : names) {
        ExperimentConfig cfg = base;
        cfg.optimizer.name = name;
        const TrainResult result = train(cfg, cfg.run.seeds.at(0));
        std::vector<double> losses;
        losses.reserve(result.records.size());
        for (const RunRecord& r : result.records) losses.push_back(r.loss);
        columns.push_back(std::move(losses));
    }
    return columns;
}

inline void write_compare_csv(const std::string& path, std::span<const std::string> names,
                              std::span<const std::vector<double>> columns) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file: " + path);
    out << "step";
    for (const std::string& n : names) out << ',' << n;
    out << '\n';
    std::size_t steps = 0;
    for (const auto& col : columns) steps = std::max(steps, col.size());
    for (std::size_t t = 0; t < steps; ++t) {
        out << t;
        for (const auto& col : columns) {
            out << ',';
            if (t < col.size()) out << detail::format_full(col[t]);
        }
        out << '\n';
    }
}

inline void write_delta_csv(const std::string& path,
                            std::span<const precision::DeltaRow> rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file: " + path);
    out << "log2_c,r,delta,delta_normalized\n";
    for (const auto& r : rows)
        out << r.log2_c << ',' << r.rank << ',' << detail::format_full(r.delta) << ','
            << detail::format_full(r.delta_normalized) << '\n';
}

// ---------------------------------------------------------------------------
// Reference validation battery. Fixed seeds and dimensions so results are
// reproducible; each suite reports pass/fail plus its measurements.
// ---------------------------------------------------------------------------

struct SuiteResult {
    std::string name;
    bool pass = false;
    json details;
};

inline json mc_report_json(const validate::McReport& r) {
    return json{{"samples", r.samples},
                {"empirical_mean_error", r.empirical_mean_error},
                {"empirical_variance_ratio", r.empirical_variance_ratio},
                {"predicted_ratio", r.predicted_ratio},
                {"pass", r.pass}};
}

inline SuiteResult suite_unbiased() {
    SeededRng rng(20240517ULL);
    const Matrix g = gaussian_matrix(rng, 16, 32, 1.0);
    ProjectionSpec spec;
    spec.log2_c = 0;
    spec.rank = 8;
    spec.base_seed = 11;
    const auto report = validate::check_unbiased(g, spec, 20000);
    return SuiteResult{"unbiased", report.pass, mc_report_json(report)};
}

inline SuiteResult suite_variance() {
    SeededRng rng(20240518ULL);
    const Matrix g = gaussian_matrix(rng, 16, 32, 1.0);
    bool all_pass = true;
    json details = json::array();
    for (int log2_c : {0, 1, 2}) {
        ProjectionSpec spec;
        spec.log2_c = log2_c;
        spec.rank = static_cast<index_t>(8 >> log2_c); // M = 8
        spec.base_seed = 13 + static_cast<std::uint64_t>(log2_c);
        const auto report = validate::check_variance(g, spec, 50000);
        all_pass = all_pass && report.pass;
        json entry = mc_report_json(report);
        entry["log2_c"] = log2_c;
        details.push_back(entry);
    }
    return SuiteResult{"variance", all_pass, details};
}

inline SuiteResult suite_lemma_c1() {
    bool all_pass = true;
    json details = json::array();
    const std::pair<index_t, index_t> cases[] = {{4, 1}, {8, 4}, {16, 2}};
    for (auto [dims, batch] : cases) {
        const auto report =
            validate::check_forward_gradient_mse(dims, batch, 100000, 97 + dims);
        all_pass = all_pass && report.pass;
        details.push_back(json{{"dims", report.dims},
                               {"batch", report.batch},
                               {"trials", report.trials},
                               {"empirical_mse", report.empirical_mse},
                               {"predicted_mse", report.predicted_mse},
                               {"pass", report.pass}});
    }
    return SuiteResult{"lemma-c1", all_pass, details};
}

inline SuiteResult suite_sgd_bound() {
    const models::Problem problem = models::make_quadratic(16, 16, 10.0, 31);
    bool all_pass = true;
    json details = json::array();
    for (int log2_c : {0, 1, 2}) {
        ProjectionSpec spec;
        spec.log2_c = log2_c;
        spec.rank = static_cast<index_t>(8 >> log2_c); // M = 8
        spec.base_seed = 41;
        const auto report = validate::check_sgd_bound(problem, spec, 500, 20, 77);
        all_pass = all_pass && report.pass;
        details.push_back(json{{"log2_c", log2_c},
                               {"mean_avg_grad_norm_sq", report.mean_avg_grad_norm_sq},
                               {"bound", report.bound},
                               {"slack", report.slack},
                               {"pass", report.pass}});
    }
    return SuiteResult{"sgd-bound", all_pass, details};
}

inline SuiteResult suite_lyapunov() {
    const models::Problem problem = models::make_quadratic(12, 12, 5.0, 53);
    ProjectionSpec spec;
    spec.log2_c = 1;
    spec.rank = 2;
    spec.base_seed = 59;
    AdamOptions opt;
    opt.lr = 5e-4;
    const auto trace = validate::monitor_lyapunov(problem, spec, opt, 300, 61, 10);
    const double steps_after_warmup =
        static_cast<double>(trace.hamiltonian.size() - trace.warmup);
    const bool pass =
        trace.violation_count <= 0.02 * steps_after_warmup &&
        trace.max_positive_increment <= 1e-6;
    json details = {{"violation_count", trace.violation_count},
                    {"max_positive_increment", trace.max_positive_increment},
                    {"empirical_r", trace.empirical_r},
                    {"a", trace.a},
                    {"b", trace.b},
                    {"rate_condition_ok", trace.rate_condition_ok},
                    {"steps", trace.hamiltonian.size()},
                    {"warmup", trace.warmup}};
    return SuiteResult{"lyapunov", pass, details};
}

inline std::vector<Matrix> reference_bf16_corpus() {
    std::vector<Matrix> corpus;
    for (int i = 0; i < 8; ++i) {
        SeededRng rng(mix_seed(20240519ULL, static_cast<std::uint64_t>(i)));
        corpus.push_back(gaussian_matrix(rng, 16, 128, 1.0));
    }
    return corpus;
}

inline SuiteResult suite_bf16_sweep() {
    const std::vector<Matrix> corpus = reference_bf16_corpus();
    ProjectionSpec base;
    base.base_seed = 67;
    const std::vector<int> log2_c_list = {-2, -1, 0, 1, 2, 3, 4, 5, 6};
    const auto rows = precision::delta_sweep(corpus, base, 64.0, log2_c_list);
    std::vector<double> xs, ys;
    json details = json::array();
    for (const auto& row : rows) {
        xs.push_back(static_cast<double>(row.log2_c));
        ys.push_back(row.delta);
        details.push_back(json{{"log2_c", row.log2_c},
                               {"r", row.rank},
                               {"delta", row.delta},
                               {"delta_normalized", row.delta_normalized}});
    }
    const double corr = validate::spearman(xs, ys);
    const bool pass = corr <= -0.8;
    return SuiteResult{"bf16-sweep", pass,
                       json{{"spearman", corr}, {"rows", details}}};
}

inline std::vector<SuiteResult> run_validation_battery(std::span<const std::string> selectors) {
    const std::vector<std::string> all = {"unbiased", "variance",  "lemma-c1",
                                          "sgd-bound", "lyapunov", "bf16-sweep"};
    std::vector<std::string> chosen(selectors.begin(), selectors.end());
    if (chosen.empty()) chosen = all;
    std::vector<SuiteResult> results;
    for (const std::string& name : chosen) {
        if (name == "unbiased") results.push_back(suite_unbiased());
        else if (name == "variance") results.push_back(suite_variance());
        else if (name == "lemma-c1") results.push_back(suite_lemma_c1());
        else if (name == "sgd-bound") results.push_back(suite_sgd_bound());
        else if (name == "lyapunov") results.push_back(suite_lyapunov());
        else if (name == "bf16-sweep") results.push_back(suite_bf16_sweep());
        else throw ConfigError("unknown validation suite: " + name);
    }
    return results;
}

} // namespace vlorp::harness
