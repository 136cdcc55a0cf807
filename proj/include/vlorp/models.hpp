#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vlorp/matrix.hpp"
#include "vlorp/rng.hpp"

namespace vlorp::models {

/// A toy differentiable objective over a list of matrix-shaped parameters.
/// Loss and gradients are exact and pure; batched variants partition the
/// synthetic dataset into equal contiguous blocks, so the mean of the batch
/// gradients reproduces the full-data gradient.
struct Problem {
    std::string name;
    std::vector<std::pair<index_t, index_t>> shapes;
    std::uint64_t data_seed = 0;
    std::optional<double> smoothness;    // L such that the loss is L-smooth
    std::optional<double> optimum_value; // known minimum of the loss

    std::function<std::vector<Matrix>(std::uint64_t seed)> init;
    std::function<double(std::span<const Matrix>)> loss;
    std::function<std::vector<Matrix>(std::span<const Matrix>)> grad;
    std::function<double(std::span<const Matrix>, index_t, index_t)> batch_loss;
    std::function<std::vector<Matrix>(std::span<const Matrix>, index_t, index_t)> batch_grad;
};

namespace detail {

inline void check_batch(index_t batch, index_t n_batches, index_t n_samples) {
    if (n_batches < 1 || batch < 0 || batch >= n_batches)
        throw Error("batch index out of range");
    if (n_samples % n_batches != 0)
        throw Error("batch count must divide the sample count");
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// log(1 + e^z) without overflow.
inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

} // namespace detail

/// Quadratic loss 0.5 * sum_ij d_ij (W - W*)_ij^2 with a seeded diagonal
/// positive-definite operator. The d_ij are log-spaced in [1, cond] and
/// shuffled, so the smoothness constant is exactly `cond` and the optimum
/// value is exactly zero.
inline Problem make_quadratic(index_t n, index_t m, double cond, std::uint64_t seed) {
    if (cond < 1.0) throw Error("make_quadratic: cond must be >= 1");
    SeededRng rng(seed);

    auto curvature = std::make_shared<Matrix>(n, m);
    const index_t count = n * m;
    {
        std::vector<double> d(static_cast<std::size_t>(count));
        for (index_t i = 0; i < count; ++i)
            d[i] = count > 1 ? std::pow(cond, static_cast<double>(i) / static_cast<double>(count - 1))
                             : cond;
        // Fisher-Yates with the problem RNG.
        for (index_t i = count - 1; i > 0; --i) {
            const index_t j = static_cast<index_t>(rng.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(d[i], d[j]);
        }
        std::copy(d.begin(), d.end(), curvature->data().begin());
    }
    auto target = std::make_shared<Matrix>(gaussian_matrix(rng, n, m, 1.0));

    Problem p;
    p.name = "quadratic";
    p.shapes = {{n, m}};
    p.data_seed = seed;
    p.smoothness = cond;
    p.optimum_value = 0.0;
    p.init = [target, n, m](std::uint64_t init_seed) {
        SeededRng r(init_seed);
        std::vector<Matrix> params;
        params.push_back(*target + gaussian_matrix(r, n, m, 1.0));
        return params;
    };
    p.loss = [curvature, target](std::span<const Matrix> params) {
        const Matrix diff = params[0] - *target;
        return 0.5 * frobenius_inner(diff, hadamard(*curvature, diff));
    };
    p.grad = [curvature, target](std::span<const Matrix> params) {
        std::vector<Matrix> g;
        g.push_back(hadamard(*curvature, params[0] - *target));
        return g;
    };
    // No dataset: every batch sees the full objective.
    p.batch_loss = [p_loss = p.loss](std::span<const Matrix> params, index_t, index_t) {
        return p_loss(params);
    };
    p.batch_grad = [p_grad = p.grad](std::span<const Matrix> params, index_t, index_t) {
        return p_grad(params);
    };
    return p;
}

/// Binary logistic regression on synthetic data. The parameter is a single
/// 1 x n_features row; labels are drawn from a noisy seeded teacher, so the
/// optimal loss stays bounded away from zero.
inline Problem make_logistic(index_t n_features, index_t n_samples, std::uint64_t seed) {
    SeededRng rng(seed);
    auto x = std::make_shared<Matrix>(gaussian_matrix(rng, n_samples, n_features, 1.0));
    Matrix teacher = gaussian_matrix(rng, 1, n_features, 9.0 / static_cast<double>(n_features));
    auto labels = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n_samples));
    for (index_t i = 0; i < n_samples; ++i) {
        double z = 0.0;
        for (index_t j = 0; j < n_features; ++j) z += (*x)(i, j) * teacher(0, j);
        (*labels)[static_cast<std::size_t>(i)] = rng.uniform() < detail::sigmoid(z) ? 1.0 : 0.0;
    }

    // loss over rows [lo, hi) = mean of softplus(z) - y*z.
    auto range_loss = [x, labels](std::span<const Matrix> params, index_t lo, index_t hi) {
        const Matrix& w = params[0];
        double acc = 0.0;
        for (index_t i = lo; i < hi; ++i) {
            double z = 0.0;
            for (index_t j = 0; j < w.cols(); ++j) z += (*x)(i, j) * w(0, j);
            acc += detail::softplus(z) - (*labels)[static_cast<std::size_t>(i)] * z;
        }
        return acc / static_cast<double>(hi - lo);
    };
    auto range_grad = [x, labels](std::span<const Matrix> params, index_t lo, index_t hi) {
        const Matrix& w = params[0];
        Matrix g(1, w.cols());
        for (index_t i = lo; i < hi; ++i) {
            double z = 0.0;
            for (index_t j = 0; j < w.cols(); ++j) z += (*x)(i, j) * w(0, j);
            const double residual = detail::sigmoid(z) - (*labels)[static_cast<std::size_t>(i)];
            for (index_t j = 0; j < w.cols(); ++j) g(0, j) += residual * (*x)(i, j);
        }
        std::vector<Matrix> out;
        out.push_back((1.0 / static_cast<double>(hi - lo)) * g);
        return out;
    };

    Problem p;
    p.name = "logistic";
    p.shapes = {{1, n_features}};
    p.data_seed = seed;
    p.init = [n_features](std::uint64_t) {
        std::vector<Matrix> params;
        params.emplace_back(1, n_features); // zero start
        return params;
    };
    p.loss = [range_loss, n_samples](std::span<const Matrix> params) {
        return range_loss(params, 0, n_samples);
    };
    p.grad = [range_grad, n_samples](std::span<const Matrix> params) {
        return range_grad(params, 0, n_samples);
    };
    p.batch_loss = [range_loss, n_samples](std::span<const Matrix> params, index_t batch,
                                           index_t n_batches) {
        detail::check_batch(batch, n_batches, n_samples);
        const index_t block = n_samples / n_batches;
        return range_loss(params, batch * block, (batch + 1) * block);
    };
    p.batch_grad = [range_grad, n_samples](std::span<const Matrix> params, index_t batch,
                                           index_t n_batches) {
        detail::check_batch(batch, n_batches, n_samples);
        const index_t block = n_samples / n_batches;
        return range_grad(params, batch * block, (batch + 1) * block);
    };
    return p;
}

namespace detail {

struct MlpData {
    std::vector<index_t> sizes;
    Matrix inputs;  // S x sizes.front()
    Matrix targets; // S x sizes.back()
};

/// Forward pass; activations[l] holds the layer-l output (tanh on hidden
/// layers, linear output layer). activations[0] is the input block.
inline std::vector<Matrix> mlp_forward(const MlpData& data, std::span<const Matrix> weights,
                                       index_t lo, index_t hi) {
    const index_t batch = hi - lo;
    Matrix a0(batch, data.sizes.front());
    for (index_t i = 0; i < batch; ++i)
        for (index_t j = 0; j < data.sizes.front(); ++j) a0(i, j) = data.inputs(lo + i, j);
    std::vector<Matrix> activations;
    activations.push_back(std::move(a0));
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Matrix z = matmul_nt(activations.back(), weights[l]);
        if (l + 1 < weights.size())
            for (double& v : z.data()) v = std::tanh(v);
        activations.push_back(std::move(z));
    }
    return activations;
}

} // namespace detail

/// Tanh MLP with mean-squared-error loss on data from a seeded noisy
/// teacher network. `sizes` lists layer widths, e.g. {in, hidden, out};
/// weights W_l have shape sizes[l+1] x sizes[l] and there are no biases.
/// Backpropagation is written out by hand; at most two hidden layers.
inline Problem make_mlp(std::vector<index_t> sizes, index_t n_samples, std::uint64_t seed) {
    if (sizes.size() < 2 || sizes.size() > 4)
        throw Error("make_mlp: sizes must describe 1 to 3 weight layers");
    SeededRng rng(seed);

    auto data = std::make_shared<detail::MlpData>();
    data->sizes = sizes;
    data->inputs = gaussian_matrix(rng, n_samples, sizes.front(), 1.0);
    {
        std::vector<Matrix> teacher;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
            teacher.push_back(gaussian_matrix(rng, sizes[l + 1], sizes[l],
                                              1.0 / static_cast<double>(sizes[l])));
        auto acts = detail::mlp_forward(*data, teacher, 0, n_samples);
        data->targets = acts.back() + gaussian_matrix(rng, n_samples, sizes.back(), 0.0025);
    }

    auto range_loss = [data](std::span<const Matrix> weights, index_t lo, index_t hi) {
        auto acts = detail::mlp_forward(*data, weights, lo, hi);
        double acc = 0.0;
        const Matrix& out = acts.back();
        for (index_t i = 0; i < out.rows(); ++i)
            for (index_t j = 0; j < out.cols(); ++j) {
                const double diff = out(i, j) - data->targets(lo + i, j);
                acc += diff * diff;
            }
        return acc / (2.0 * static_cast<double>(hi - lo));
    };
    auto range_grad = [data](std::span<const Matrix> weights, index_t lo, index_t hi) {
        const double inv_batch = 1.0 / static_cast<double>(hi - lo);
        auto acts = detail::mlp_forward(*data, weights, lo, hi);
        const std::size_t layers = weights.size();
        std::vector<Matrix> grads(layers);
        // delta = dLoss/dZ of the current layer, starting at the linear output.
        Matrix delta = acts.back();
        for (index_t i = 0; i < delta.rows(); ++i)
            for (index_t j = 0; j < delta.cols(); ++j)
                delta(i, j) = (delta(i, j) - data->targets(lo + i, j)) * inv_batch;
        for (std::size_t l = layers; l-- > 0;) {
            grads[l] = matmul(transpose(delta), acts[l]);
            if (l == 0) break;
            Matrix upstream = matmul(delta, weights[l]);
            // tanh'(z) = 1 - a^2 with a = tanh(z) already stored in acts[l].
            delta = Matrix(upstream.rows(), upstream.cols());
            for (index_t i = 0; i < delta.rows(); ++i)
                for (index_t j = 0; j < delta.cols(); ++j) {
                    const double a = acts[l](i, j);
                    delta(i, j) = upstream(i, j) * (1.0 - a * a);
                }
        }
        return grads;
    };

    Problem p;
    p.name = "mlp";
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        p.shapes.emplace_back(sizes[l + 1], sizes[l]);
    p.data_seed = seed;
    p.init = [sizes](std::uint64_t init_seed) {
        SeededRng r(init_seed);
        std::vector<Matrix> weights;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
            weights.push_back(gaussian_matrix(r, sizes[l + 1], sizes[l],
                                              1.0 / static_cast<double>(sizes[l])));
        return weights;
    };
    p.loss = [range_loss, n_samples](std::span<const Matrix> w) {
        return range_loss(w, 0, n_samples);
    };
    p.grad = [range_grad, n_samples](std::span<const Matrix> w) {
        return range_grad(w, 0, n_samples);
    };
    p.batch_loss = [range_loss, n_samples](std::span<const Matrix> w, index_t batch,
                                           index_t n_batches) {
        detail::check_batch(batch, n_batches, n_samples);
        const index_t block = n_samples / n_batches;
        return range_loss(w, batch * block, (batch + 1) * block);
    };
    p.batch_grad = [range_grad, n_samples](std::span<const Matrix> w, index_t batch,
                                           index_t n_batches) {
        detail::check_batch(batch, n_batches, n_samples);
        const index_t block = n_samples / n_batches;
        return range_grad(w, batch * block, (batch + 1) * block);
    };
    return p;
}

/// Largest relative Frobenius error between the analytic gradient and
/// central finite differences, maximized over `n_probes` random parameter
/// settings. The gradient-correctness gate for every Problem.
inline double finite_difference_gap(const Problem& problem, index_t n_probes,
                                    std::uint64_t seed, double h = 1e-5) {
    double worst = 0.0;
    for (index_t probe = 0; probe < n_probes; ++probe) {
        std::vector<Matrix> params = problem.init(mix_seed(seed, static_cast<std::uint64_t>(probe)));
        // Perturb away from special points such as the exact optimum.
        SeededRng jitter(mix_seed(seed, 0xFD00 + static_cast<std::uint64_t>(probe)));
        for (Matrix& w : params)
            w += gaussian_matrix(jitter, w.rows(), w.cols(), 0.25);

        const std::vector<Matrix> analytic = problem.grad(params);
        for (std::size_t p = 0; p < params.size(); ++p) {
            Matrix fd(params[p].rows(), params[p].cols());
            for (index_t i = 0; i < params[p].rows(); ++i) {
                for (index_t j = 0; j < params[p].cols(); ++j) {
                    const double saved = params[p](i, j);
                    params[p](i, j) = saved + h;
                    const double up = problem.loss(params);
                    params[p](i, j) = saved - h;
                    const double down = problem.loss(params);
                    params[p](i, j) = saved;
                    fd(i, j) = (up - down) / (2.0 * h);
                }
            }
            worst = std::max(worst, relative_frobenius_error(fd, analytic[p], 1e-12));
        }
    }
    return worst;
}

} // namespace vlorp::models
