#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"
#include "vlorp/projection.hpp"

using namespace vlorp;
using test_helpers::naive_matmul;
using test_helpers::naive_reshape;
using test_helpers::random_matrix;

namespace {

ProjectionSpec spec_of(int log2_c, index_t rank, index_t tau = 20,
                       std::uint64_t seed = 5) {
    ProjectionSpec s;
    s.log2_c = log2_c;
    s.rank = rank;
    s.tau = tau;
    s.base_seed = seed;
    return s;
}

} // namespace

TEST_CASE("seed_for is constant within an epoch and fresh across epochs") {
    const ProjectionSpec spec = spec_of(0, 4, 20);
    CHECK(seed_for(spec, 0) == seed_for(spec, 19));
    CHECK(seed_for(spec, 19) != seed_for(spec, 20));
    CHECK(seed_for(spec, 7) == seed_for(spec, 7));

    const ProjectionSpec fresh = spec_of(0, 4, 1);
    CHECK(seed_for(fresh, 0) != seed_for(fresh, 1));
    CHECK(seed_for(fresh, 1) != seed_for(fresh, 2));
}

TEST_CASE("spec divisibility and reshape arithmetic") {
    const ProjectionSpec s4 = spec_of(2, 2);
    CHECK(s4.reshaped_cols(32) == 8);
    CHECK(s4.reshaped_rows(3) == 12);
    CHECK(s4.memory_budget() == 8.0);
    CHECK_FALSE(s4.divides(3, 30));
    CHECK_THROWS_AS(s4.reshaped_cols(30), GranularityMismatch);

    const ProjectionSpec half = spec_of(-1, 8);
    CHECK(half.granularity() == 0.5);
    CHECK(half.memory_budget() == 4.0);
    CHECK(half.reshaped_rows(6) == 3);
    CHECK(half.reshaped_cols(5) == 10);
    CHECK_THROWS_AS(half.reshaped_rows(7), GranularityMismatch);
}

TEST_CASE("make_projection shape and epoch determinism") {
    const ProjectionSpec spec = spec_of(2, 2);
    const Projection p0 = make_projection(spec, 4, 32, 0);
    CHECK(p0.matrix.rows() == 8);
    CHECK(p0.matrix.cols() == 2);
    CHECK(p0.seed_epoch == 0);

    const Projection p19 = make_projection(spec, 4, 32, 19);
    CHECK(p0.matrix == p19.matrix);
    const Projection p20 = make_projection(spec, 4, 32, 20);
    CHECK(max_abs_diff(p0.matrix, p20.matrix) > 0.0);
}

TEST_CASE("projection entries have variance 1/r") {
    const index_t rank = 4;
    const ProjectionSpec spec = spec_of(0, rank, 1, 333);
    double acc = 0.0, acc_sq = 0.0;
    index_t count = 0;
    for (index_t step = 0; step < 20000; ++step) {
        const Projection p = make_projection(spec, 4, 16, step);
        for (double x : p.matrix.data()) {
            acc += x;
            acc_sq += x * x;
            ++count;
        }
    }
    const double mean = acc / static_cast<double>(count);
    const double var = acc_sq / static_cast<double>(count) - mean * mean;
    CHECK(std::abs(var - 0.25) < 0.02 * 0.25);
}

TEST_CASE("rademacher projections match the gaussian second moment") {
    ProjectionSpec spec = spec_of(0, 4, 1, 21);
    spec.distribution = Distribution::Rademacher;
    const Projection p = make_projection(spec, 4, 16, 0);
    for (double x : p.matrix.data()) CHECK(std::abs(x) == 0.5);
}

TEST_CASE("project matches the two-step reshape-multiply oracle") {
    const ProjectionSpec spec = spec_of(1, 1, 20, 99); // c=2, r=1 on 4x4
    const Matrix g = random_matrix(17, 4, 4);
    const Projection proj = make_projection(spec, 4, 4, 0);
    const ProjectedGradient pg = project(g, proj);

    const Matrix oracle = naive_matmul(naive_reshape(g, 8, 2), proj.matrix);
    CHECK(relative_frobenius_error(pg.data, oracle) <= 1e-12);
    CHECK(pg.data.rows() == 8);
    CHECK(pg.data.cols() == 1);
}

TEST_CASE("project maps zero to zero") {
    const ProjectionSpec spec = spec_of(0, 3);
    const Matrix zero(6, 9);
    const ProjectedGradient pg = project(zero, spec, 0);
    CHECK(frobenius_norm(pg.data) == 0.0);
}

TEST_CASE("c=1 reduces to plain row-wise projection") {
    const ProjectionSpec spec = spec_of(0, 4, 20, 7);
    const Matrix g = random_matrix(3, 6, 16);
    const Projection proj = make_projection(spec, 6, 16, 0);
    const ProjectedGradient pg = project(g, proj);
    CHECK(max_abs_diff(pg.data, naive_matmul(g, proj.matrix)) <= 1e-14);
}

TEST_CASE("project_back with an injected complete orthonormal matrix is exact") {
    // r == m/c and P P^T == I: the projection is a bijection.
    const ProjectionSpec spec = spec_of(1, 4, 20, 3); // c=2 on 4x8 -> 8x4, r=4
    const Matrix g = random_matrix(29, 4, 8);

    SECTION("identity") {
        const Projection proj = inject_projection(Matrix::identity(4), spec, 0);
        const Matrix back = project_back(project(g, proj), proj, 4, 8);
        CHECK(back == g);
    }
    SECTION("permutation") {
        Matrix perm(4, 4);
        perm(0, 2) = perm(1, 0) = perm(2, 3) = perm(3, 1) = 1.0;
        const Projection proj = inject_projection(perm, spec, 0);
        const Matrix back = project_back(project(g, proj), proj, 4, 8);
        CHECK(back == g);
    }
}

TEST_CASE("project_back of a zero subspace gradient is zero") {
    const ProjectionSpec spec = spec_of(0, 2);
    const Projection proj = make_projection(spec, 4, 8, 0);
    const ProjectedGradient pg{Matrix(4, 2), 0, spec};
    CHECK(frobenius_norm(project_back(pg, proj, 4, 8)) == 0.0);
}

TEST_CASE("project_back enforces epoch consistency") {
    const ProjectionSpec spec = spec_of(0, 2, 10);
    const Matrix g = random_matrix(11, 4, 8);
    const ProjectedGradient pg = project(g, spec, 0);
    CHECK_NOTHROW(project_back(pg, 4, 8, 9));
    CHECK_THROWS_AS(project_back(pg, 4, 8, 10), EpochMismatch);
}

TEST_CASE("round-trip Monte Carlo mean recovers the gradient") {
    const Matrix g = random_matrix(41, 8, 8);
    const ProjectionSpec spec = spec_of(0, 8, 1, 12); // M = 8, fresh epoch per step
    Matrix mean(8, 8);
    const index_t epochs = 20000;
    for (index_t e = 0; e < epochs; ++e) {
        const Projection proj = make_projection(spec, 8, 8, e);
        mean += project_back(project(g, proj), proj, 8, 8);
    }
    mean = (1.0 / static_cast<double>(epochs)) * mean;
    CHECK(relative_frobenius_error(mean, g) < 0.02);
}

TEST_CASE("gamma scales the projected-back gradient") {
    ProjectionSpec spec = spec_of(0, 2, 20, 15);
    const Matrix g = random_matrix(19, 4, 8);
    const Projection unit = make_projection(spec, 4, 8, 0);
    spec.gamma = 2.5;
    const Projection scaled = make_projection(spec, 4, 8, 0);
    const Matrix a = project_back(project(g, unit), unit, 4, 8);
    const Matrix b = project_back(project(g, scaled), scaled, 4, 8);
    CHECK(max_abs_diff(2.5 * a, b) <= 1e-12);
}

TEST_CASE("accumulate equals projection of the averaged gradient") {
    const ProjectionSpec spec = spec_of(1, 2, 20, 23);
    const Projection proj = make_projection(spec, 4, 8, 0);

    SECTION("single substep is plain projection") {
        const Matrix g = random_matrix(5, 4, 8);
        const std::vector<Matrix> grads = {g};
        const ProjectedGradient acc = accumulate(grads, proj);
        CHECK(max_abs_diff(acc.data, project(g, proj).data) <= 1e-15);
    }
    SECTION("opposite gradients cancel") {
        const Matrix g = random_matrix(6, 4, 8);
        const std::vector<Matrix> grads = {g, -1.0 * g};
        CHECK(frobenius_norm(accumulate(grads, proj).data) <= 1e-15);
    }
    SECTION("four random substeps match the mean-gradient projection") {
        std::vector<Matrix> grads;
        Matrix mean(4, 8);
        for (int i = 0; i < 4; ++i) {
            grads.push_back(random_matrix(100 + i, 4, 8));
            mean += grads.back();
        }
        mean = 0.25 * mean;
        const ProjectedGradient acc = accumulate(grads, proj);
        CHECK(relative_frobenius_error(acc.data, project(mean, proj).data) <= 1e-12);
    }
}

TEST_CASE("projected gradients from different epochs cannot be summed") {
    const ProjectionSpec spec = spec_of(0, 2, 1);
    const Matrix g = random_matrix(3, 4, 8);
    ProjectedGradient a = project(g, spec, 0);
    const ProjectedGradient b = project(g, spec, 1);
    CHECK_THROWS_AS(a += b, EpochMismatch);
}

TEST_CASE("storage is n*M elements for every configuration sharing the budget") {
    const Matrix g = random_matrix(9, 8, 16);
    const double budget = 8.0;
    for (int log2_c : {-1, 0, 1, 2, 3}) {
        ProjectionSpec spec =
            spec_of(log2_c, static_cast<index_t>(std::ldexp(budget, -log2_c)));
        REQUIRE(spec.memory_budget() == budget);
        const ProjectedGradient pg = project(g, spec, 0);
        CHECK(pg.data.size() == static_cast<index_t>(8 * budget));
    }
}

TEST_CASE("forward gradient estimator") {
    SECTION("zero gradient maps to zero") {
        SeededRng rng(1);
        const Matrix zero(1, 8);
        CHECK(frobenius_norm(forward_gradient_estimate(zero, 4, rng)) == 0.0);
    }
    SECTION("scalar case MSE is 2") {
        SeededRng rng(2);
        const Matrix g = Matrix::from_rows({{1}});
        double acc = 0.0;
        const index_t trials = 1000000;
        for (index_t t = 0; t < trials; ++t) {
            const Matrix est = forward_gradient_estimate(g, 1, rng);
            acc += frobenius_norm_sq(est - g);
        }
        const double mse = acc / static_cast<double>(trials);
        CHECK(std::abs(mse - 2.0) < 0.03 * 2.0);
    }
    SECTION("N=8 b=4 MSE is 9/4") {
        SeededRng data_rng(3);
        Matrix g = gaussian_matrix(data_rng, 1, 8, 1.0);
        g = (1.0 / frobenius_norm(g)) * g;
        SeededRng rng(4);
        double acc = 0.0;
        const index_t trials = 200000;
        for (index_t t = 0; t < trials; ++t) {
            const Matrix est = forward_gradient_estimate(g, 4, rng);
            acc += frobenius_norm_sq(est - g);
        }
        const double mse = acc / static_cast<double>(trials);
        CHECK(std::abs(mse - 2.25) < 0.03 * 2.25);
    }
}
