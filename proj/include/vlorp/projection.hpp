#pragma once

#include <cmath>
#include <span>
#include <string>

#include "vlorp/matrix.hpp"
#include "vlorp/rng.hpp"

namespace vlorp {

enum class Distribution { Normal, Rademacher };

/// What happens to subspace-shaped optimizer moments when the projection
/// matrix is resampled at an epoch boundary.
enum class EpochStatePolicy { Retain, Reset };

/// One projection configuration: granularity factor c = 2^log2_c, rank r,
/// resampling gap tau and the seed everything derives from. An n x m
/// gradient is reshaped to (n*c) x (m/c) before projecting onto r columns,
/// so the memory budget c*r fixes the stored size n*c*r regardless of how it
/// splits between c and r.
struct ProjectionSpec {
    int log2_c = 0;
    index_t rank = 1;
    index_t tau = 20;
    std::uint64_t base_seed = 0;
    Distribution distribution = Distribution::Normal;
    double gamma = 1.0;

    /// c as a double; exact for the whole supported range of log2_c.
    double granularity() const { return std::ldexp(1.0, log2_c); }

    /// Memory budget c*r. Dyadic, hence exact in double.
    double memory_budget() const {
        return std::ldexp(static_cast<double>(rank), log2_c);
    }

    bool divides(index_t n, index_t m) const {
        if (log2_c >= 0)
            return (m >> log2_c << log2_c) == m;
        return (n >> -log2_c << -log2_c) == n;
    }

    /// Row count n*c of the reshaped gradient.
    index_t reshaped_rows(index_t n) const {
        require_divides(n, -1);
        return log2_c >= 0 ? (n << log2_c) : (n >> -log2_c);
    }

    /// Column count m/c of the reshaped gradient.
    index_t reshaped_cols(index_t m) const {
        require_divides(-1, m);
        return log2_c >= 0 ? (m >> log2_c) : (m << -log2_c);
    }

    /// Independent spec for one parameter matrix of a multi-parameter model.
    ProjectionSpec for_parameter(std::size_t index) const {
        ProjectionSpec derived = *this;
        derived.base_seed = mix_seed(base_seed, 0x706172616DULL + index);
        return derived;
    }

    friend bool operator==(const ProjectionSpec&, const ProjectionSpec&) = default;

private:
    void require_divides(index_t n, index_t m) const {
        if (log2_c >= 0 && m >= 0 && (m >> log2_c << log2_c) != m)
            throw GranularityMismatch("m/c is not an integer (m=" + std::to_string(m) +
                                      ", log2_c=" + std::to_string(log2_c) + ")");
        if (log2_c < 0 && n >= 0 && (n >> -log2_c << -log2_c) != n)
            throw GranularityMismatch("n*c is not an integer (n=" + std::to_string(n) +
                                      ", log2_c=" + std::to_string(log2_c) + ")");
    }
};

/// Resampling-epoch index of a step: constant over [k*tau, (k+1)*tau).
inline index_t epoch_of(const ProjectionSpec& spec, index_t step) {
    return step / spec.tau;
}

/// Seed of the projection matrix in force at `step`. Pure; constant within
/// an epoch and mixed with SplitMix64 across epochs.
inline std::uint64_t seed_for(const ProjectionSpec& spec, index_t step) {
    return mix_seed(spec.base_seed, static_cast<std::uint64_t>(epoch_of(spec, step)));
}

/// A realized projection matrix (m/c) x r bound to its epoch and spec.
struct Projection {
    Matrix matrix;
    index_t seed_epoch = 0;
    ProjectionSpec spec;
};

/// Generate the projection matrix for the epoch containing `step`. Entries
/// are N(0, 1/r), or +-1/sqrt(r) for the Rademacher variant, which matches
/// the Gaussian second moment. Identical within an epoch by construction.
inline Projection make_projection(const ProjectionSpec& spec, index_t n, index_t m,
                                  index_t step) {
    const index_t rows = spec.reshaped_cols(m); // m/c
    (void)spec.reshaped_rows(n);                // validates n*c
    SeededRng rng(seed_for(spec, step));
    Matrix p = spec.distribution == Distribution::Normal
                   ? gaussian_matrix(rng, rows, spec.rank, 1.0 / static_cast<double>(spec.rank))
                   : rademacher_matrix(rng, rows, spec.rank,
                                       1.0 / std::sqrt(static_cast<double>(spec.rank)));
    return Projection{std::move(p), epoch_of(spec, step), spec};
}

/// Wrap an externally supplied projection matrix (tests inject orthonormal
/// ones to obtain exact round trips).
inline Projection inject_projection(Matrix p, const ProjectionSpec& spec,
                                    index_t seed_epoch) {
    if (p.cols() != spec.rank)
        throw DimensionMismatch("injected projection has wrong rank");
    return Projection{std::move(p), seed_epoch, spec};
}

/// The stored subspace gradient, shape (n*c) x r, tagged with the epoch of
/// the projection that produced it.
struct ProjectedGradient {
    Matrix data;
    index_t seed_epoch = 0;
    ProjectionSpec spec;
};

/// reshape(G, [nc, m/c]) * P.
inline ProjectedGradient project(const Matrix& g, const Projection& proj) {
    const index_t nc = proj.spec.reshaped_rows(g.rows());
    const index_t mc = proj.spec.reshaped_cols(g.cols());
    if (proj.matrix.rows() != mc)
        throw GranularityMismatch("projection matrix does not match gradient shape");
    return ProjectedGradient{matmul(reshape(g, nc, mc), proj.matrix),
                             proj.seed_epoch, proj.spec};
}

inline ProjectedGradient project(const Matrix& g, const ProjectionSpec& spec,
                                 index_t step) {
    return project(g, make_projection(spec, g.rows(), g.cols(), step));
}

/// gamma * reshape(data * P^T, [n, m]). The projection must come from the
/// same epoch that produced the stored gradient.
inline Matrix project_back(const ProjectedGradient& pg, const Projection& proj,
                           index_t n, index_t m) {
    if (pg.seed_epoch != proj.seed_epoch || !(pg.spec == proj.spec))
        throw EpochMismatch("projected gradient and projection come from different epochs");
    Matrix wide = matmul_nt(pg.data, proj.matrix);
    Matrix out = reshape(wide, n, m);
    if (pg.spec.gamma != 1.0) out = pg.spec.gamma * out;
    return out;
}

inline Matrix project_back(const ProjectedGradient& pg, index_t n, index_t m,
                           index_t step) {
    const Projection proj = make_projection(pg.spec, n, m, step);
    return project_back(pg, proj, n, m);
}

/// Sum of projected gradients from the same epoch and spec.
inline ProjectedGradient& operator+=(ProjectedGradient& acc,
                                     const ProjectedGradient& other) {
    if (acc.seed_epoch != other.seed_epoch || !(acc.spec == other.spec))
        throw EpochMismatch("cannot sum projected gradients across epochs");
    acc.data += other.data;
    return acc;
}

/// Project each substep gradient scaled by 1/K and accumulate; by linearity
/// this equals the projection of the averaged gradient.
inline ProjectedGradient accumulate(std::span<const Matrix> substep_grads,
                                    const Projection& proj) {
    if (substep_grads.empty())
        throw Error("accumulate: need at least one substep gradient");
    const double inv_k = 1.0 / static_cast<double>(substep_grads.size());
    ProjectedGradient acc = project(inv_k * substep_grads[0], proj);
    for (std::size_t i = 1; i < substep_grads.size(); ++i)
        acc += project(inv_k * substep_grads[i], proj);
    return acc;
}

inline ProjectedGradient accumulate(std::span<const Matrix> substep_grads,
                                    const ProjectionSpec& spec, index_t step) {
    if (substep_grads.empty())
        throw Error("accumulate: need at least one substep gradient");
    return accumulate(substep_grads,
                      make_projection(spec, substep_grads[0].rows(),
                                      substep_grads[0].cols(), step));
}

/// Forward-gradient estimate of a row vector g: (1/b) sum_i (g . v_i) v_i^T
/// with v_i standard normal of dimension N.
inline Matrix forward_gradient_estimate(const Matrix& g, index_t b, SeededRng& rng) {
    if (g.rows() != 1) throw DimensionMismatch("forward gradient expects a row vector");
    if (b < 1) throw Error("forward gradient needs at least one sample");
    const index_t n = g.cols();
    Matrix estimate(1, n);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (index_t i = 0; i < b; ++i) {
        for (double& x : v) x = rng.normal();
        double directional = 0.0;
        for (index_t j = 0; j < n; ++j) directional += g(0, j) * v[j];
        for (index_t j = 0; j < n; ++j) estimate(0, j) += directional * v[j];
    }
    return (1.0 / static_cast<double>(b)) * estimate;
}

} // namespace vlorp
