#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "vlorp/matrix.hpp"
#include "vlorp/rng.hpp"

namespace test_helpers {

using vlorp::index_t;
using vlorp::Matrix;

/// Independent naive triple-loop product, the matmul oracle.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    REQUIRE(a.cols() == b.rows());
    Matrix out(a.rows(), b.cols());
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (index_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

/// Row-major reinterpretation by explicit index arithmetic, independent of
/// the library reshape.
inline Matrix naive_reshape(const Matrix& m, index_t rows, index_t cols) {
    REQUIRE(rows * cols == m.size());
    Matrix out(rows, cols);
    for (index_t flat = 0; flat < m.size(); ++flat)
        out(flat / cols, flat % cols) = m(flat / m.cols(), flat % m.cols());
    return out;
}

inline Matrix random_matrix(std::uint64_t seed, index_t rows, index_t cols) {
    vlorp::SeededRng rng(seed);
    return vlorp::gaussian_matrix(rng, rows, cols, 1.0);
}

} // namespace test_helpers
