#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "vlorp/matrix.hpp"

namespace vlorp {

/// SplitMix64 finalizer applied to base + golden_ratio * (stream + 1).
/// Used to derive projection-epoch and per-parameter seeds from one base
/// seed; the same (base, stream) pair always yields the same value.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic random stream: mt19937_64 uniforms, Gaussians via
/// Box-Muller. Identical seed and position give identical output within one
/// build; cross-platform bit equality is not promised. Single-owner: use
/// independent instances with distinct seeds for concurrent sampling.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Count of values handed out so far.
    std::uint64_t position() const { return position_; }

    std::uint64_t next_u64() {
        ++position_;
        return engine_();
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        ++position_;
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal. Box-Muller on two 53-bit uniforms, the first shifted
    /// into (0, 1] so the log never sees zero; the second sample of each pair
    /// is cached.
    double normal() {
        ++position_;
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// +1 or -1 with equal probability (top bit of one engine draw).
    double rademacher() {
        ++position_;
        return (engine_() >> 63) ? 1.0 : -1.0;
    }

    /// Uniform integer in [0, bound). Used for deterministic shuffles; the
    /// tiny modulo bias is irrelevant at the sizes involved.
    std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t position_ = 0;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// i.i.d. N(0, variance) entries, filled in row-major order.
inline Matrix gaussian_matrix(SeededRng& rng, index_t rows, index_t cols,
                              double variance) {
    if (variance <= 0.0) throw Error("gaussian_matrix: variance must be positive");
    const double sd = std::sqrt(variance);
    Matrix m(rows, cols);
    for (double& x : m.data()) x = sd * rng.normal();
    return m;
}

/// i.i.d. entries of +scale or -scale with equal probability.
inline Matrix rademacher_matrix(SeededRng& rng, index_t rows, index_t cols,
                                double scale) {
    if (scale <= 0.0) throw Error("rademacher_matrix: scale must be positive");
    Matrix m(rows, cols);
    for (double& x : m.data()) x = scale * rng.rademacher();
    return m;
}

} // namespace vlorp
