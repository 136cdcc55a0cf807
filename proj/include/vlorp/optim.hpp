#pragma once

#include <cmath>
#include <string>

#include "vlorp/matrix.hpp"
#include "vlorp/projection.hpp"

namespace vlorp {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Drop the second moment entirely (pure momentum); in this mode the
    /// subspace and original-space schemes produce identical trajectories.
    bool momentum_only = false;
};

/// Step size M / ((m + c + M) L) that yields the O(1/T) rate for projected
/// SGD on an L-smooth objective.
inline double theoretical_stepsize(index_t m, double c, double memory_budget, double l_smooth) {
    if (l_smooth <= 0.0)
        throw NonPositiveSmoothness("smoothness constant must be positive");
    return memory_budget / ((static_cast<double>(m) + c + memory_budget) * l_smooth);
}

/// W <- W - eta * project_back(pg).
inline void sgd_step(Matrix& w, const ProjectedGradient& pg, const Projection& proj,
                     double eta) {
    w -= eta * project_back(pg, proj, w.rows(), w.cols());
}

/// Adam-style moments for the subspace scheme (moments shaped (n*c) x r) and
/// the original-space scheme (moments shaped (n*c) x (m/c)).
struct SchemeState {
    Matrix first_moment;
    Matrix second_moment;
    index_t t = 0;
};

inline SchemeState make_ss_state(const ProjectionSpec& spec, index_t n, index_t m) {
    const index_t nc = spec.reshaped_rows(n);
    (void)spec.reshaped_cols(m);
    return SchemeState{Matrix(nc, spec.rank), Matrix(nc, spec.rank), 0};
}

inline SchemeState make_os_state(const ProjectionSpec& spec, index_t n, index_t m) {
    const index_t nc = spec.reshaped_rows(n);
    const index_t mc = spec.reshaped_cols(m);
    return SchemeState{Matrix(nc, mc), Matrix(nc, mc), 0};
}

namespace detail {

inline void check_epoch(const ProjectedGradient& pg, const Projection& proj) {
    if (pg.seed_epoch != proj.seed_epoch || !(pg.spec == proj.spec))
        throw EpochMismatch("optimizer step mixes projection epochs");
}

/// m / (sqrt(v) + eps), or plain m in momentum-only mode.
inline Matrix adapted_direction(const Matrix& m, const Matrix& v, const AdamOptions& opt) {
    if (opt.momentum_only) return m;
    return divide_elements(m, add_scalar(sqrt_elements(v), opt.epsilon));
}

} // namespace detail

/// Subspace scheme: moments live in the projected space and only the adapted
/// direction is mapped back.
inline void ss_adam_step(SchemeState& state, const ProjectedGradient& pg,
                         const Projection& proj, Matrix& w, const AdamOptions& opt) {
    detail::check_epoch(pg, proj);
    if (!state.first_moment.same_shape(pg.data))
        throw ShapeMismatch("subspace state does not match projected gradient");
    state.t += 1;
    state.first_moment = opt.beta1 * state.first_moment + (1.0 - opt.beta1) * pg.data;
    if (!opt.momentum_only)
        state.second_moment =
            opt.beta2 * state.second_moment + (1.0 - opt.beta2) * square_elements(pg.data);
    const Matrix direction =
        detail::adapted_direction(state.first_moment, state.second_moment, opt);
    ProjectedGradient mapped{direction, pg.seed_epoch, pg.spec};
    w -= opt.lr * project_back(mapped, proj, w.rows(), w.cols());
}

/// Original-space scheme: the projected gradient is mapped back first and
/// the moments live at original shape.
inline void os_adam_step(SchemeState& state, const ProjectedGradient& pg,
                         const Projection& proj, Matrix& w, const AdamOptions& opt) {
    detail::check_epoch(pg, proj);
    Matrix g_original = matmul_nt(pg.data, proj.matrix);
    if (pg.spec.gamma != 1.0) g_original = pg.spec.gamma * g_original;
    if (!state.first_moment.same_shape(g_original))
        throw ShapeMismatch("original-space state does not match mapped gradient");
    state.t += 1;
    state.first_moment = opt.beta1 * state.first_moment + (1.0 - opt.beta1) * g_original;
    if (!opt.momentum_only)
        state.second_moment = opt.beta2 * state.second_moment +
                              (1.0 - opt.beta2) * square_elements(g_original);
    const Matrix direction =
        detail::adapted_direction(state.first_moment, state.second_moment, opt);
    w -= opt.lr * reshape(direction, w.rows(), w.cols());
}

/// State of the factored optimizer: first moment in the subspace, rank-1
/// factored second moment (row and column accumulators) in the original
/// space. Persistent storage is n*M + n*c + m/c elements; no (n*c) x (m/c)
/// second moment is ever kept across steps.
struct ProjFactorState {
    Matrix first_moment;      // (n*c) x r
    Matrix row_second_moment; // (n*c) x 1
    Matrix col_second_moment; // 1 x (m/c)
    index_t t = 0;
};

inline ProjFactorState make_projfactor_state(const ProjectionSpec& spec, index_t n,
                                             index_t m) {
    const index_t nc = spec.reshaped_rows(n);
    const index_t mc = spec.reshaped_cols(m);
    return ProjFactorState{Matrix(nc, spec.rank), Matrix(nc, 1), Matrix(1, mc), 0};
}

/// Factored second-moment reconstruction v_r v_c / (1^T v_r). Defined as
/// zero when the row accumulator sums to zero, leaving epsilon alone to
/// guard the divide.
inline Matrix factored_second_moment(const Matrix& row_acc, const Matrix& col_acc) {
    const double total = sum(row_acc);
    if (total == 0.0) return Matrix(row_acc.rows(), col_acc.cols());
    return (1.0 / total) * outer(row_acc, col_acc);
}

/// One factored-optimizer update:
///   m   <- b1 m + (1-b1) S
///   v_r <- b2 v_r + (1-b2) (S P^T)^2 1
///   v_c <- b2 v_c + (1-b2) 1^T (S P^T)^2
///   W   <- W - lr * (1-b2^t)/(1-b1^t) * reshape((m P^T) / (sqrt(v_r v_c / 1^T v_r) + eps))
/// where S is the accumulated subspace gradient. The bias correction is the
/// single factor (1-b2^t)/(1-b1^t) applied to the whole step.
inline void projfactor_step(ProjFactorState& state, const ProjectedGradient& pg,
                            const Projection& proj, Matrix& w, const AdamOptions& opt) {
    detail::check_epoch(pg, proj);
    if (!state.first_moment.same_shape(pg.data))
        throw ShapeMismatch("factored state does not match projected gradient");

    state.t += 1;
    state.first_moment = opt.beta1 * state.first_moment + (1.0 - opt.beta1) * pg.data;

    Matrix g_original = matmul_nt(pg.data, proj.matrix);
    if (pg.spec.gamma != 1.0) g_original = pg.spec.gamma * g_original;
    const Matrix g_sq = square_elements(g_original);
    state.row_second_moment =
        opt.beta2 * state.row_second_moment + (1.0 - opt.beta2) * row_sums(g_sq);
    state.col_second_moment =
        opt.beta2 * state.col_second_moment + (1.0 - opt.beta2) * col_sums(g_sq);

    Matrix vhat = factored_second_moment(state.row_second_moment, state.col_second_moment);
    Matrix momentum_original = matmul_nt(state.first_moment, proj.matrix);
    if (pg.spec.gamma != 1.0) momentum_original = pg.spec.gamma * momentum_original;
    const Matrix direction =
        divide_elements(momentum_original, add_scalar(sqrt_elements(vhat), opt.epsilon));

    const double correction = (1.0 - std::pow(opt.beta2, static_cast<double>(state.t))) /
                              (1.0 - std::pow(opt.beta1, static_cast<double>(state.t)));
    w -= (opt.lr * correction) * reshape(direction, w.rows(), w.cols());
}

/// Apply the configured policy when the projection epoch rolls over:
/// subspace-shaped moments are either kept as-is (and re-projected by the
/// new matrix on the next step) or reset to zero. Original-space moments are
/// untouched either way.
inline void on_epoch_change(SchemeState& state, bool subspace_scheme, EpochStatePolicy policy) {
    if (policy == EpochStatePolicy::Reset && subspace_scheme) {
        state.first_moment = Matrix(state.first_moment.rows(), state.first_moment.cols());
        state.second_moment = Matrix(state.second_moment.rows(), state.second_moment.cols());
    }
}

inline void on_epoch_change(ProjFactorState& state, EpochStatePolicy policy) {
    if (policy == EpochStatePolicy::Reset)
        state.first_moment = Matrix(state.first_moment.rows(), state.first_moment.cols());
}

/// Full Adam baseline.
struct AdamState {
    Matrix first_moment;
    Matrix second_moment;
    index_t t = 0;
};

inline AdamState make_adam_state(index_t n, index_t m) {
    return AdamState{Matrix(n, m), Matrix(n, m), 0};
}

inline void adam_step(AdamState& state, const Matrix& g, Matrix& w, const AdamOptions& opt) {
    if (!state.first_moment.same_shape(g))
        throw ShapeMismatch("adam state does not match gradient");
    state.t += 1;
    state.first_moment = opt.beta1 * state.first_moment + (1.0 - opt.beta1) * g;
    state.second_moment =
        opt.beta2 * state.second_moment + (1.0 - opt.beta2) * square_elements(g);
    const double t = static_cast<double>(state.t);
    const Matrix m_hat = (1.0 / (1.0 - std::pow(opt.beta1, t))) * state.first_moment;
    const Matrix v_hat = (1.0 / (1.0 - std::pow(opt.beta2, t))) * state.second_moment;
    w -= opt.lr * divide_elements(m_hat, add_scalar(sqrt_elements(v_hat), opt.epsilon));
}

/// Factored baseline on the full gradient; identical update rule to the
/// projected factored optimizer with the projection removed, so comparisons
/// isolate the effect of projection alone.
struct AdafactorState {
    Matrix first_moment;      // n x m
    Matrix row_second_moment; // n x 1
    Matrix col_second_moment; // 1 x m
    index_t t = 0;
};

inline AdafactorState make_adafactor_state(index_t n, index_t m) {
    return AdafactorState{Matrix(n, m), Matrix(n, 1), Matrix(1, m), 0};
}

inline void adafactor_step(AdafactorState& state, const Matrix& g, Matrix& w,
                           const AdamOptions& opt) {
    if (!state.first_moment.same_shape(g))
        throw ShapeMismatch("adafactor state does not match gradient");
    state.t += 1;
    state.first_moment = opt.beta1 * state.first_moment + (1.0 - opt.beta1) * g;
    const Matrix g_sq = square_elements(g);
    state.row_second_moment =
        opt.beta2 * state.row_second_moment + (1.0 - opt.beta2) * row_sums(g_sq);
    state.col_second_moment =
        opt.beta2 * state.col_second_moment + (1.0 - opt.beta2) * col_sums(g_sq);
    const Matrix vhat =
        factored_second_moment(state.row_second_moment, state.col_second_moment);
    const Matrix direction =
        divide_elements(state.first_moment, add_scalar(sqrt_elements(vhat), opt.epsilon));
    const double correction = (1.0 - std::pow(opt.beta2, static_cast<double>(state.t))) /
                              (1.0 - std::pow(opt.beta1, static_cast<double>(state.t)));
    w -= (opt.lr * correction) * direction;
}

enum class OptimizerKind { Sgd, Adam, Adafactor, SsAdam, OsAdam, ProjFactor };

inline OptimizerKind optimizer_kind_from_name(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "adafactor") return OptimizerKind::Adafactor;
    if (name == "ss") return OptimizerKind::SsAdam;
    if (name == "os") return OptimizerKind::OsAdam;
    if (name == "projfactor") return OptimizerKind::ProjFactor;
    throw ConfigError("unknown optimizer: " + name);
}

inline std::string optimizer_name(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::Sgd: return "sgd";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::Adafactor: return "adafactor";
        case OptimizerKind::SsAdam: return "ss";
        case OptimizerKind::OsAdam: return "os";
        case OptimizerKind::ProjFactor: return "projfactor";
    }
    return "?";
}

inline bool is_projected(OptimizerKind kind) {
    return kind == OptimizerKind::Sgd || kind == OptimizerKind::SsAdam ||
           kind == OptimizerKind::OsAdam || kind == OptimizerKind::ProjFactor;
}

/// Persistent optimizer-state element count for one n x m parameter.
inline index_t state_element_count(OptimizerKind kind, index_t n, index_t m,
                                   const ProjectionSpec& spec) {
    const index_t nc = spec.reshaped_rows(n);
    const index_t mc = spec.reshaped_cols(m);
    switch (kind) {
        case OptimizerKind::Sgd: return 0;
        case OptimizerKind::Adam: return 2 * n * m;
        case OptimizerKind::Adafactor: return n * m + n + m;
        case OptimizerKind::SsAdam: return 2 * nc * spec.rank;
        case OptimizerKind::OsAdam: return 2 * nc * mc;
        case OptimizerKind::ProjFactor: return nc * spec.rank + nc + mc;
    }
    return 0;
}

/// Elements of the stored projected gradient itself: n*c*r = n*M.
inline index_t projected_gradient_elements(index_t n, const ProjectionSpec& spec) {
    return spec.reshaped_rows(n) * spec.rank;
}

} // namespace vlorp
