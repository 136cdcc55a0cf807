#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "vlorp/matrix.hpp"
#include "vlorp/models.hpp"
#include "vlorp/optim.hpp"
#include "vlorp/projection.hpp"

namespace vlorp::validate {

/// Exact rational, used for predicted variance ratios so they are never
/// floated from sample estimates.
struct Ratio {
    long long num = 0;
    long long den = 1;

    static Ratio reduced(long long n, long long d) {
        const long long g = std::gcd(n, d);
        return Ratio{n / g, d / g};
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// (m + c) / (c * r) in exact integer arithmetic. For c = 2^k the ratio is
/// (m + 2^k) / (2^k r) when k >= 0 and (m 2^-k + 1) / r when k < 0.
inline Ratio predicted_variance_ratio(index_t m, const ProjectionSpec& spec) {
    if (spec.log2_c >= 0) {
        const long long c = 1LL << spec.log2_c;
        return Ratio::reduced(static_cast<long long>(m) + c, c * spec.rank);
    }
    const long long d = 1LL << -spec.log2_c;
    return Ratio::reduced(static_cast<long long>(m) * d + 1, spec.rank);
}

struct McReport {
    index_t samples = 0;
    double empirical_mean_error = 0.0;
    double empirical_variance_ratio = 0.0;
    double predicted_ratio = 0.0;
    bool pass = false;
};

namespace detail {

/// Draw `samples` independent projection epochs of G and accumulate the
/// running mean of project_back(project(G)) together with the squared-error
/// sum. Each trial gets its own epoch regardless of tau.
struct McAccumulator {
    Matrix mean_estimate;
    double sq_error_sum = 0.0;
};

inline McAccumulator mc_roundtrip(const Matrix& g, const ProjectionSpec& spec,
                                  index_t samples) {
    McAccumulator acc{Matrix(g.rows(), g.cols()), 0.0};
    for (index_t trial = 0; trial < samples; ++trial) {
        const index_t step = trial * spec.tau; // one epoch per trial
        const Projection proj = make_projection(spec, g.rows(), g.cols(), step);
        const Matrix back = project_back(project(g, proj), proj, g.rows(), g.cols());
        acc.mean_estimate += back;
        acc.sq_error_sum += frobenius_norm_sq(back - g);
    }
    acc.mean_estimate = (1.0 / static_cast<double>(samples)) * acc.mean_estimate;
    return acc;
}

} // namespace detail

/// Monte-Carlo unbiasedness check: the relative Frobenius error of the mean
/// round-trip estimate must lie inside the 3-sigma CLT band
/// 3 sqrt((m + c) / (M samples)). A zero gradient has no defined ratio; the
/// absolute error is checked against zero instead.
inline McReport check_unbiased(const Matrix& g, const ProjectionSpec& spec,
                               index_t samples) {
    const auto acc = detail::mc_roundtrip(g, spec, samples);
    const Ratio ratio = predicted_variance_ratio(g.cols(), spec);
    McReport report;
    report.samples = samples;
    report.predicted_ratio = ratio.value();
    const double g_norm = frobenius_norm(g);
    if (g_norm == 0.0) {
        report.empirical_mean_error = frobenius_norm(acc.mean_estimate);
        report.pass = report.empirical_mean_error == 0.0;
        return report;
    }
    report.empirical_mean_error = frobenius_norm(acc.mean_estimate - g) / g_norm;
    report.empirical_variance_ratio =
        acc.sq_error_sum / (static_cast<double>(samples) * g_norm * g_norm);
    const double band = 3.0 * std::sqrt(ratio.value() / static_cast<double>(samples));
    report.pass = report.empirical_mean_error <= band;
    return report;
}

/// Monte-Carlo variance check: mean of ||G_back - G||^2 / ||G||^2 must match
/// (m + c) / M within the given relative tolerance.
inline McReport check_variance(const Matrix& g, const ProjectionSpec& spec,
                               index_t samples, double rel_tol = 0.03) {
    const auto acc = detail::mc_roundtrip(g, spec, samples);
    const Ratio ratio = predicted_variance_ratio(g.cols(), spec);
    McReport report;
    report.samples = samples;
    report.predicted_ratio = ratio.value();
    const double g_norm_sq = frobenius_norm_sq(g);
    if (g_norm_sq == 0.0) {
        report.empirical_mean_error = frobenius_norm(acc.mean_estimate);
        report.pass = acc.sq_error_sum == 0.0;
        return report;
    }
    report.empirical_mean_error =
        frobenius_norm(acc.mean_estimate - g) / std::sqrt(g_norm_sq);
    report.empirical_variance_ratio =
        acc.sq_error_sum / (static_cast<double>(samples) * g_norm_sq);
    report.pass = std::abs(report.empirical_variance_ratio - report.predicted_ratio) <=
                  rel_tol * report.predicted_ratio;
    return report;
}

struct FgMseReport {
    index_t dims = 0;
    index_t batch = 0;
    index_t trials = 0;
    double empirical_mse = 0.0;
    double predicted_mse = 0.0;
    bool pass = false;
};

/// Mean squared error of the forward-gradient estimator against the closed
/// form (N + 1)/b * ||g||^2.
inline FgMseReport check_forward_gradient_mse(index_t dims, index_t batch, index_t trials,
                                              std::uint64_t seed, double rel_tol = 0.03) {
    SeededRng data_rng(mix_seed(seed, 0x46474D5345ULL));
    Matrix g = gaussian_matrix(data_rng, 1, dims, 1.0);
    // Normalize so the predicted value is (N+1)/b exactly.
    g = (1.0 / frobenius_norm(g)) * g;

    double acc = 0.0;
    SeededRng trial_rng(mix_seed(seed, 0x7472ULL));
    for (index_t t = 0; t < trials; ++t) {
        const Matrix estimate = forward_gradient_estimate(g, batch, trial_rng);
        acc += frobenius_norm_sq(estimate - g);
    }
    FgMseReport report;
    report.dims = dims;
    report.batch = batch;
    report.trials = trials;
    report.empirical_mse = acc / static_cast<double>(trials);
    report.predicted_mse = static_cast<double>(dims + 1) / static_cast<double>(batch);
    report.pass = std::abs(report.empirical_mse - report.predicted_mse) <=
                  rel_tol * report.predicted_mse;
    return report;
}

struct SgdBoundReport {
    index_t steps = 0;
    index_t seeds = 0;
    double mean_avg_grad_norm_sq = 0.0;
    double bound = 0.0;
    double slack = 1.1;
    bool pass = false;
    std::vector<double> decay_curve; // seed-mean ||G_t||^2 per step
};

/// Run projected SGD at the theoretical step size and verify the closing
/// inequality (1/T) sum_t ||G_t||^2 <= 2 (m + c + M) L / (M T) * (L(W0) - L*),
/// seed-averaged on both sides, with a slack factor for finite sampling.
inline SgdBoundReport check_sgd_bound(const models::Problem& problem,
                                      const ProjectionSpec& spec, index_t steps,
                                      index_t n_seeds, std::uint64_t seed0,
                                      double slack = 1.1) {
    if (!problem.smoothness || !problem.optimum_value)
        throw Error("check_sgd_bound needs a problem with known smoothness and optimum");
    const auto [n, m] = problem.shapes.at(0);
    const double l_smooth = *problem.smoothness;
    const double budget = spec.memory_budget();
    const double eta = theoretical_stepsize(m, spec.granularity(), budget, l_smooth);

    SgdBoundReport report;
    report.steps = steps;
    report.seeds = n_seeds;
    report.slack = slack;
    report.decay_curve.assign(static_cast<std::size_t>(steps), 0.0);

    double lhs_sum = 0.0;
    double bound_sum = 0.0;
    for (index_t s = 0; s < n_seeds; ++s) {
        std::vector<Matrix> params = problem.init(mix_seed(seed0, static_cast<std::uint64_t>(s)));
        ProjectionSpec run_spec = spec;
        run_spec.base_seed = mix_seed(spec.base_seed, 0x5347ULL + static_cast<std::uint64_t>(s));
        const double gap = problem.loss(params) - *problem.optimum_value;

        double grad_norm_acc = 0.0;
        for (index_t t = 0; t < steps; ++t) {
            const Matrix g = problem.grad(params)[0];
            grad_norm_acc += frobenius_norm_sq(g);
            report.decay_curve[static_cast<std::size_t>(t)] += frobenius_norm_sq(g);
            const Projection proj = make_projection(run_spec, n, m, t);
            sgd_step(params[0], project(g, proj), proj, eta);
        }
        lhs_sum += grad_norm_acc / static_cast<double>(steps);
        bound_sum += 2.0 * gap / (eta * static_cast<double>(steps));
    }
    for (double& v : report.decay_curve) v /= static_cast<double>(n_seeds);
    report.mean_avg_grad_norm_sq = lhs_sum / static_cast<double>(n_seeds);
    report.bound = bound_sum / static_cast<double>(n_seeds);
    report.pass = report.mean_avg_grad_norm_sq <= slack * report.bound;
    return report;
}

/// Factored-second-moment kinetic energy (1/2a) <m_o, m_o / sqrt(vhat)> with
/// m_o the momentum mapped to original shape. Contributions with zero
/// momentum and zero second moment count as zero; an all-zero row
/// accumulator makes the whole term zero.
inline double kinetic_energy(const ProjFactorState& state, const Projection& proj,
                             double a) {
    if (sum(state.row_second_moment) == 0.0) return 0.0;
    Matrix momentum = matmul_nt(state.first_moment, proj.matrix);
    if (proj.spec.gamma != 1.0) momentum = proj.spec.gamma * momentum;
    const Matrix vhat =
        factored_second_moment(state.row_second_moment, state.col_second_moment);
    double acc = 0.0;
    for (index_t i = 0; i < momentum.size(); ++i) {
        const double mo = momentum.data()[i];
        const double vv = vhat.data()[i];
        if (mo == 0.0) continue;
        acc += mo * mo / std::sqrt(vv);
    }
    return acc / (2.0 * a);
}

/// Loss plus kinetic energy; the discrete shadow of the descent certificate.
inline double hamiltonian(double loss_value, const ProjFactorState& state,
                          const Projection& proj, double a) {
    return loss_value + kinetic_energy(state, proj, a);
}

struct LyapunovTrace {
    std::vector<double> hamiltonian;
    std::vector<double> loss_term;
    std::vector<double> kinetic_term;
    double a = 0.0;
    double b = 0.0;
    double empirical_r = 0.0;     // max over steps of ||G_o||^2 / ||v_r||
    bool rate_condition_ok = false; // a >= (R + 1) b / (4a) at the observed R
    index_t violation_count = 0;    // increments beyond the noise floor
    double max_positive_increment = 0.0;
    index_t warmup = 0;

    index_t increments_above(double threshold, index_t from) const {
        index_t count = 0;
        for (std::size_t i = std::max<std::size_t>(1, static_cast<std::size_t>(from));
             i < hamiltonian.size(); ++i)
            if (hamiltonian[i] - hamiltonian[i - 1] > threshold) ++count;
        return count;
    }
};

/// Run the factored optimizer on a single-parameter problem and record the
/// Hamiltonian after every step. The continuous-time guarantee holds for a
/// fixed projection, so the monitor keeps one epoch alive for the whole run
/// (tau is raised to the step count). a = 1 - beta1 and b = 1 - beta2 map the
/// discrete recurrences onto the ODE coefficients.
inline LyapunovTrace monitor_lyapunov(const models::Problem& problem,
                                      const ProjectionSpec& spec, const AdamOptions& opt,
                                      index_t steps, std::uint64_t seed,
                                      index_t warmup = 10, double noise_floor = 1e-12) {
    const auto [n, m] = problem.shapes.at(0);
    ProjectionSpec run_spec = spec;
    run_spec.tau = std::max(spec.tau, steps + 1);

    std::vector<Matrix> params = problem.init(mix_seed(seed, 0x4C59ULL));
    ProjFactorState state = make_projfactor_state(run_spec, n, m);
    const Projection proj = make_projection(run_spec, n, m, 0);

    LyapunovTrace trace;
    trace.a = 1.0 - opt.beta1;
    trace.b = 1.0 - opt.beta2;
    trace.warmup = warmup;
    for (index_t t = 0; t < steps; ++t) {
        const Matrix g = problem.grad(params)[0];
        const ProjectedGradient pg = project(g, proj);
        projfactor_step(state, pg, proj, params[0], opt);

        const double loss_after = problem.loss(params);
        const double kinetic = kinetic_energy(state, proj, trace.a);
        trace.loss_term.push_back(loss_after);
        trace.kinetic_term.push_back(kinetic);
        trace.hamiltonian.push_back(loss_after + kinetic);

        Matrix g_original = matmul_nt(pg.data, proj.matrix);
        const double vr_norm = frobenius_norm(state.row_second_moment);
        if (vr_norm > 0.0)
            trace.empirical_r =
                std::max(trace.empirical_r, frobenius_norm_sq(g_original) / vr_norm);
    }
    trace.rate_condition_ok =
        trace.a >= (trace.empirical_r + 1.0) * trace.b / (4.0 * trace.a);
    trace.violation_count = trace.increments_above(noise_floor, warmup);
    for (std::size_t i = std::max<std::size_t>(1, static_cast<std::size_t>(warmup));
         i < trace.hamiltonian.size(); ++i)
        trace.max_positive_increment = std::max(
            trace.max_positive_increment, trace.hamiltonian[i] - trace.hamiltonian[i - 1]);
    return trace;
}

/// Spearman rank correlation; distinct values assumed (ties get stable
/// order, which is enough for the monotone-trend checks here).
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw Error("spearman: need two equal-length series");
    const std::size_t n = xs.size();
    auto ranks = [n](std::span<const double> v) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> rank(n);
        for (std::size_t i = 0; i < n; ++i) rank[order[i]] = static_cast<double>(i);
        return rank;
    };
    const std::vector<double> rx = ranks(xs);
    const std::vector<double> ry = ranks(ys);
    const double mean = static_cast<double>(n - 1) / 2.0;
    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (rx[i] - mean) * (ry[i] - mean);
        var_x += (rx[i] - mean) * (rx[i] - mean);
        var_y += (ry[i] - mean) * (ry[i] - mean);
    }
    return cov / std::sqrt(var_x * var_y);
}

} // namespace vlorp::validate
