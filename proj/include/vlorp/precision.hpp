#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <vector>

#include "vlorp/matrix.hpp"
#include "vlorp/projection.hpp"

namespace vlorp::precision {

namespace detail {

constexpr double kBf16Max = 0x1.FEp127; // (2 - 2^-7) * 2^127

/// Round a positive finite significand*2^e decomposition to 8 significant
/// bits, ties to even. `scaled` is the significand mapped into [128, 256).
inline double round_significand(double scaled) {
    const double fl = std::floor(scaled);
    const double frac = scaled - fl; // exact: fl and scaled share a binade
    if (frac > 0.5) return fl + 1.0;
    if (frac < 0.5) return fl;
    return std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0;
}

} // namespace detail

/// Nearest bfloat16-representable value (8-bit exponent, 7-bit mantissa),
/// ties to even, computed exactly from the double operand rather than
/// through an intermediate float32 rounding. Overflow saturates to +-inf;
/// NaN passes through; idempotent and monotone.
inline double round_bf16(double x) {
    if (!std::isfinite(x) || x == 0.0) return x;
    const double ax = std::abs(x);
    const double sign = x < 0.0 ? -1.0 : 1.0;
    int e = 0;
    const double mant = std::frexp(ax, &e); // ax = mant * 2^e, mant in [0.5, 1)
    if (e <= -126) {
        // Subnormal range: fixed quantum 2^-133.
        const double scaled = std::ldexp(ax, 133);
        const double fl = std::floor(scaled);
        const double frac = scaled - fl;
        double k;
        if (frac > 0.5) k = fl + 1.0;
        else if (frac < 0.5) k = fl;
        else k = std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0;
        return sign * std::ldexp(k, -133);
    }
    const double rounded = detail::round_significand(std::ldexp(mant, 8));
    const double result = std::ldexp(rounded, e - 8);
    if (result > detail::kBf16Max) return sign * std::numeric_limits<double>::infinity();
    return sign * result;
}

inline Matrix round_bf16(const Matrix& m) {
    Matrix out = m;
    for (double& x : out.data()) x = round_bf16(x);
    return out;
}

/// Matrix product emulated in bfloat16: inputs rounded first, then every
/// product and every running-sum addition rounded again. Accumulation is
/// sequential over the inner dimension, so results are reproducible.
inline Matrix matmul_bf16(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionMismatch("matmul_bf16: inner dimensions differ");
    const Matrix ar = round_bf16(a);
    const Matrix br = round_bf16(b);
    Matrix out(a.rows(), b.cols());
    for (index_t i = 0; i < ar.rows(); ++i) {
        for (index_t j = 0; j < br.cols(); ++j) {
            double acc = 0.0;
            for (index_t k = 0; k < ar.cols(); ++k) {
                const double prod = round_bf16(ar(i, k) * br(k, j));
                acc = round_bf16(acc + prod);
            }
            out(i, j) = acc;
        }
    }
    return out;
}

namespace detail {

/// FNV-1a over the matrix bytes. Gives each distinct corpus matrix its own
/// projection seed while keeping duplicates on the same one, so the error
/// average is invariant under corpus duplication.
inline std::uint64_t content_hash(const Matrix& m) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (v >> (8 * byte)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    };
    mix(static_cast<std::uint64_t>(m.rows()));
    mix(static_cast<std::uint64_t>(m.cols()));
    for (double x : m.data()) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(x));
        std::memcpy(&bits, &x, sizeof(bits));
        mix(bits);
    }
    return h;
}

} // namespace detail

/// Mean absolute elementwise gap between the bf16-emulated projection and a
/// 64-bit projection of the same bf16-rounded inputs, averaged over elements
/// and then over corpus matrices. Each matrix's projection is seeded from
/// the spec seed mixed with a hash of the matrix contents.
inline double delta(std::span<const Matrix> corpus, const ProjectionSpec& spec) {
    if (corpus.empty()) throw Error("delta: corpus must be nonempty");
    double total = 0.0;
    for (const Matrix& g : corpus) {
        const index_t nc = spec.reshaped_rows(g.rows());
        const index_t mc = spec.reshaped_cols(g.cols());
        ProjectionSpec seeded = spec;
        seeded.base_seed = mix_seed(spec.base_seed, detail::content_hash(g));
        const Projection proj = make_projection(seeded, g.rows(), g.cols(), 0);

        const Matrix g_lowp = round_bf16(reshape(g, nc, mc));
        const Matrix p_lowp = round_bf16(proj.matrix);
        const Matrix emulated = matmul_bf16(g_lowp, p_lowp);
        const Matrix reference = matmul(g_lowp, p_lowp);

        double acc = 0.0;
        for (index_t i = 0; i < emulated.size(); ++i)
            acc += std::abs(emulated.data()[i] - reference.data()[i]);
        total += acc / static_cast<double>(emulated.size());
    }
    return total / static_cast<double>(corpus.size());
}

struct DeltaRow {
    int log2_c = 0;
    index_t rank = 0;
    double delta = 0.0;
    double delta_normalized = 0.0;
};

/// Error sweep over granularities at a fixed memory budget; rank is derived
/// as M/c per configuration. Normalization divides by the finest (largest c)
/// configuration's delta.
inline std::vector<DeltaRow> delta_sweep(std::span<const Matrix> corpus,
                                         const ProjectionSpec& base, double memory_budget,
                                         std::span<const int> log2_c_list) {
    std::vector<DeltaRow> rows;
    int finest = log2_c_list.front();
    for (int c : log2_c_list) finest = std::max(finest, c);
    double finest_delta = 0.0;
    for (int log2_c : log2_c_list) {
        ProjectionSpec spec = base;
        spec.log2_c = log2_c;
        const double rank = std::ldexp(memory_budget, -log2_c);
        if (rank < 1.0 || rank != std::floor(rank))
            throw ConfigError("memory budget / c is not a positive integer");
        spec.rank = static_cast<index_t>(rank);
        DeltaRow row;
        row.log2_c = log2_c;
        row.rank = spec.rank;
        row.delta = delta(corpus, spec);
        rows.push_back(row);
        if (log2_c == finest) finest_delta = row.delta;
    }
    for (DeltaRow& row : rows)
        row.delta_normalized = finest_delta > 0.0 ? row.delta / finest_delta : 0.0;
    return rows;
}

} // namespace vlorp::precision
