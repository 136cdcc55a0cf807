#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"
#include "vlorp/matrix.hpp"
#include "vlorp/rng.hpp"

using namespace vlorp;
using test_helpers::naive_matmul;
using test_helpers::random_matrix;

TEST_CASE("reshape reinterprets row-major data") {
    const Matrix m = Matrix::from_rows({{1, 2, 3, 4}, {5, 6, 7, 8}});
    const Matrix r = reshape(m, 4, 2);
    CHECK(r == Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}, {7, 8}}));

    CHECK(reshape(m, 2, 4) == m);
    CHECK_THROWS_AS(reshape(m, 3, 3), DimensionMismatch);
}

TEST_CASE("reshape is a bitwise Frobenius isometry") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Matrix m = random_matrix(seed, 6, 8);
        const Matrix r = reshape(m, 12, 4);
        CHECK(frobenius_norm(r) == frobenius_norm(m));
        CHECK(reshape(r, 6, 8) == m);
    }
}

TEST_CASE("matmul basics") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    CHECK(matmul(Matrix::identity(2), a) == a);

    const Matrix selector = Matrix::from_rows({{1, 0}, {0, 0}});
    const Matrix v = Matrix::from_rows({{5}, {7}});
    CHECK(matmul(selector, v) == Matrix::from_rows({{5}, {0}}));

    CHECK_THROWS_AS(matmul(a, Matrix(3, 2)), DimensionMismatch);
}

TEST_CASE("matmul agrees with the naive triple-loop oracle") {
    SeededRng dims_rng(12345);
    for (int trial = 0; trial < 100; ++trial) {
        const index_t n = 1 + static_cast<index_t>(dims_rng.below(64));
        const index_t k = 1 + static_cast<index_t>(dims_rng.below(64));
        const index_t m = 1 + static_cast<index_t>(dims_rng.below(64));
        const Matrix a = random_matrix(1000 + trial, n, k);
        const Matrix b = random_matrix(2000 + trial, k, m);
        const Matrix fast = matmul(a, b);
        const Matrix oracle = naive_matmul(a, b);
        CHECK(relative_frobenius_error(fast, oracle) <= 1e-12);
    }
}

TEST_CASE("matmul_nt equals multiplication by the transpose") {
    const Matrix a = random_matrix(7, 5, 9);
    const Matrix b = random_matrix(8, 4, 9);
    CHECK(max_abs_diff(matmul_nt(a, b), matmul(a, transpose(b))) <= 1e-14);
}

TEST_CASE("frobenius metrics") {
    CHECK(frobenius_norm(Matrix::from_rows({{3, 4}})) == 5.0);
    CHECK(frobenius_norm(Matrix(4, 7)) == 0.0);

    const Matrix a = random_matrix(42, 13, 11);
    const double inner = frobenius_inner(a, a);
    const double norm_sq = frobenius_norm(a) * frobenius_norm(a);
    CHECK(std::abs(inner - norm_sq) / norm_sq < 1e-12);

    CHECK_THROWS_AS(frobenius_inner(a, Matrix(11, 13)), DimensionMismatch);
}

TEST_CASE("elementwise helpers") {
    const Matrix a = Matrix::from_rows({{1, 4}, {9, 16}});
    CHECK(sqrt_elements(a) == Matrix::from_rows({{1, 2}, {3, 4}}));
    CHECK(square_elements(Matrix::from_rows({{-2, 3}})) == Matrix::from_rows({{4, 9}}));
    CHECK(row_sums(a) == Matrix::from_rows({{5}, {25}}));
    CHECK(col_sums(a) == Matrix::from_rows({{10, 20}}));
    CHECK(outer(Matrix::from_rows({{1}, {2}}), Matrix::from_rows({{3, 4}})) ==
          Matrix::from_rows({{3, 4}, {6, 8}}));
    CHECK(sum(a) == 30.0);
}

TEST_CASE("gaussian_matrix is deterministic per seed") {
    SeededRng r1(99), r2(99), r3(100);
    const Matrix a = gaussian_matrix(r1, 17, 23, 1.0);
    const Matrix b = gaussian_matrix(r2, 17, 23, 1.0);
    const Matrix c = gaussian_matrix(r3, 17, 23, 1.0);
    CHECK(a == b);
    CHECK(max_abs_diff(a, c) > 0.0);
}

TEST_CASE("gaussian_matrix moments match the configured variance") {
    SeededRng rng(2024);
    const Matrix big = gaussian_matrix(rng, 1000, 1000, 1.0);
    const double mean = sum(big) / static_cast<double>(big.size());
    CHECK(std::abs(mean) < 0.005);

    SeededRng rng2(2025);
    const Matrix quarter = gaussian_matrix(rng2, 1000, 1000, 0.25);
    const double mean_q = sum(quarter) / static_cast<double>(quarter.size());
    double var = 0.0;
    for (double x : quarter.data()) var += (x - mean_q) * (x - mean_q);
    var /= static_cast<double>(quarter.size() - 1);
    CHECK(std::abs(var - 0.25) < 0.01 * 0.25);
}

TEST_CASE("gaussian_matrix rejects nonpositive variance") {
    SeededRng rng(1);
    CHECK_THROWS_AS(gaussian_matrix(rng, 2, 2, 0.0), Error);
}

TEST_CASE("rademacher_matrix support and moments") {
    SeededRng rng(31);
    const double scale = 0.5;
    const Matrix m = rademacher_matrix(rng, 100, 100, scale);
    for (double x : m.data()) CHECK((x == scale || x == -scale));

    SeededRng rng2(32);
    const Matrix big = rademacher_matrix(rng2, 1000, 1000, scale);
    const double mean = sum(big) / static_cast<double>(big.size());
    CHECK(std::abs(mean) < 0.005 * scale);

    SeededRng r1(33), r2(33);
    CHECK(rademacher_matrix(r1, 8, 8, 1.0) == rademacher_matrix(r2, 8, 8, 1.0));
}

TEST_CASE("seeded rng streams are reproducible and tracked") {
    SeededRng a(77), b(77);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
    CHECK(a.position() == 100);
    CHECK(a.seed() == 77);
}

TEST_CASE("mix_seed separates streams") {
    CHECK(mix_seed(1, 0) == mix_seed(1, 0));
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
}

TEST_CASE("matrix constructors validate dimensions") {
    CHECK_THROWS_AS(Matrix(0, 3), DimensionMismatch);
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0, 2.0}), DimensionMismatch);
    CHECK_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), DimensionMismatch);
}
