#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "vlorp/errors.hpp"

namespace vlorp {

using index_t = std::int64_t;

/// Dense row-major matrix of 64-bit reals. The single carrier type for
/// parameters, gradients, projection matrices and optimizer moments.
class Matrix {
public:
    Matrix() = default;

    Matrix(index_t rows, index_t cols)
        : rows_(rows), cols_(cols), data_(check_dims(rows, cols), 0.0) {}

    Matrix(index_t rows, index_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (static_cast<index_t>(data_.size()) != check_dims(rows, cols))
            throw DimensionMismatch("matrix data length does not match rows*cols");
    }

    /// Build from nested braces: Matrix::from_rows({{1,2},{3,4}}).
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const index_t r = static_cast<index_t>(rows.size());
        const index_t c = r > 0 ? static_cast<index_t>(rows.begin()->size()) : 0;
        Matrix m(r, c);
        index_t i = 0;
        for (const auto& row : rows) {
            if (static_cast<index_t>(row.size()) != c)
                throw DimensionMismatch("ragged row in matrix literal");
            index_t j = 0;
            for (double x : row) m(i, j++) = x;
            ++i;
        }
        return m;
    }

    static Matrix identity(index_t n) {
        Matrix m(n, n);
        for (index_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    index_t rows() const { return rows_; }
    index_t cols() const { return cols_; }
    index_t size() const { return rows_ * cols_; }

    double operator()(index_t i, index_t j) const { return data_[i * cols_ + j]; }
    double& operator()(index_t i, index_t j) { return data_[i * cols_ + j]; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    static index_t check_dims(index_t rows, index_t cols) {
        if (rows <= 0 || cols <= 0)
            throw DimensionMismatch("matrix dimensions must be positive");
        return rows * cols;
    }

    index_t rows_ = 0;
    index_t cols_ = 0;
    std::vector<double> data_;
};

/// Reinterpret the row-major data sequence under new dimensions. The data is
/// never reordered, so the Frobenius norm is preserved exactly.
inline Matrix reshape(const Matrix& m, index_t new_rows, index_t new_cols) {
    if (new_rows * new_cols != m.size() || new_rows <= 0 || new_cols <= 0)
        throw DimensionMismatch("reshape changes the element count");
    return Matrix(new_rows, new_cols,
                  std::vector<double>(m.data().begin(), m.data().end()));
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionMismatch("matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    const index_t n = a.rows(), k = a.cols(), m = b.cols();
    for (index_t i = 0; i < n; ++i) {
        for (index_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            for (index_t j = 0; j < m; ++j) out(i, j) += aip * b(p, j);
        }
    }
    return out;
}

/// a * transpose(b); both operands are traversed along contiguous rows.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw DimensionMismatch("matmul_nt: inner dimensions differ");
    Matrix out(a.rows(), b.rows());
    const index_t k = a.cols();
    for (index_t i = 0; i < a.rows(); ++i) {
        for (index_t j = 0; j < b.rows(); ++j) {
            double acc = 0.0;
            for (index_t p = 0; p < k; ++p) acc += a(i, p) * b(j, p);
            out(i, j) = acc;
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (index_t i = 0; i < m.rows(); ++i)
        for (index_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("operator+: shapes differ");
    Matrix out = a;
    for (index_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("operator-: shapes differ");
    Matrix out = a;
    for (index_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

inline Matrix operator*(double s, const Matrix& m) {
    Matrix out = m;
    for (double& x : out.data()) x *= s;
    return out;
}

inline Matrix operator*(const Matrix& m, double s) { return s * m; }

inline Matrix& operator+=(Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("operator+=: shapes differ");
    for (index_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
    return a;
}

inline Matrix& operator-=(Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("operator-=: shapes differ");
    for (index_t i = 0; i < a.size(); ++i) a.data()[i] -= b.data()[i];
    return a;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("hadamard: shapes differ");
    Matrix out = a;
    for (index_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

inline Matrix square_elements(const Matrix& m) { return hadamard(m, m); }

inline Matrix sqrt_elements(const Matrix& m) {
    Matrix out = m;
    for (double& x : out.data()) x = std::sqrt(x);
    return out;
}

inline Matrix add_scalar(const Matrix& m, double s) {
    Matrix out = m;
    for (double& x : out.data()) x += s;
    return out;
}

inline Matrix divide_elements(const Matrix& num, const Matrix& den) {
    if (!num.same_shape(den)) throw DimensionMismatch("divide_elements: shapes differ");
    Matrix out = num;
    for (index_t i = 0; i < out.size(); ++i) out.data()[i] /= den.data()[i];
    return out;
}

/// Outer product of a column vector (k x 1) and a row vector (1 x l).
inline Matrix outer(const Matrix& col, const Matrix& row) {
    if (col.cols() != 1 || row.rows() != 1)
        throw DimensionMismatch("outer: expects a column and a row vector");
    Matrix out(col.rows(), row.cols());
    for (index_t i = 0; i < col.rows(); ++i)
        for (index_t j = 0; j < row.cols(); ++j) out(i, j) = col(i, 0) * row(0, j);
    return out;
}

inline Matrix row_sums(const Matrix& m) {
    Matrix out(m.rows(), 1);
    for (index_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (index_t j = 0; j < m.cols(); ++j) acc += m(i, j);
        out(i, 0) = acc;
    }
    return out;
}

inline Matrix col_sums(const Matrix& m) {
    Matrix out(1, m.cols());
    for (index_t i = 0; i < m.rows(); ++i)
        for (index_t j = 0; j < m.cols(); ++j) out(0, j) += m(i, j);
    return out;
}

inline double sum(const Matrix& m) {
    double acc = 0.0;
    for (double x : m.data()) acc += x;
    return acc;
}

inline double frobenius_inner(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw DimensionMismatch("frobenius_inner: shapes differ");
    double acc = 0.0;
    for (index_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
    return acc;
}

inline double frobenius_norm_sq(const Matrix& m) { return frobenius_inner(m, m); }

inline double frobenius_norm(const Matrix& m) { return std::sqrt(frobenius_norm_sq(m)); }

inline double max_abs(const Matrix& m) {
    double acc = 0.0;
    for (double x : m.data()) acc = std::max(acc, std::abs(x));
    return acc;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("max_abs_diff: shapes differ");
    double acc = 0.0;
    for (index_t i = 0; i < a.size(); ++i)
        acc = std::max(acc, std::abs(a.data()[i] - b.data()[i]));
    return acc;
}

/// ||a - b|| / max(||b||, floor); the floor keeps the ratio defined at zero.
inline double relative_frobenius_error(const Matrix& a, const Matrix& b,
                                       double floor = 1e-300) {
    Matrix diff = a - b;
    return frobenius_norm(diff) / std::max(frobenius_norm(b), floor);
}

} // namespace vlorp
