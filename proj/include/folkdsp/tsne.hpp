#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "folkdsp/error.hpp"
#include "folkdsp/matrix.hpp"
#include "folkdsp/rng.hpp"

namespace folkdsp::unsup {

/// (sum |a_i - b_i|^p)^(1/p); p = 2 is Euclidean, p = 1 Manhattan.
template <typename A, typename B>
double minkowski_distance(const A& a, const B& b, double p) {
    if (p == 2.0) return (a - b).norm();
    if (p == 1.0) return (a - b).cwiseAbs().sum();
    return std::pow((a - b).cwiseAbs().array().pow(p).sum(), 1.0 / p);
}

struct TsneConfig {
    double perplexity = 30.0;
    double minkowski_p = 2.0;
    std::size_t iterations = 1000;
    double learning_rate = 200.0;
    std::uint64_t seed = 0;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_iters = 250;
    std::size_t momentum_switch_iter = 250;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    /// KL divergence is recorded every this many iterations (and at the end).
    std::size_t record_every = 50;
};

struct KlCheckpoint {
    std::size_t iteration = 0;  // number of completed gradient steps
    double kl = 0.0;
};

struct TsneEmbedding {
    Matrix points;  // n x 2
    std::vector<KlCheckpoint> kl_trace;
    TsneConfig config;
};

/// Row-conditional Gaussian affinities p_{j|i} with per-row precision found
/// by bisection so that each row's Shannon entropy (nats) matches
/// log(perplexity). Squared Minkowski distances play the role of the
/// squared Euclidean distance.
struct ConditionalAffinities {
    Matrix P;                     // n x n, zero diagonal, rows sum to 1
    std::vector<double> entropy;  // achieved entropy per row
    std::vector<double> beta;     // precision 1 / (2 sigma^2) per row
};

inline ConditionalAffinities conditional_affinities(const Matrix& X, double perplexity, double p = 2.0,
                                                    double tolerance = 1e-5, int max_steps = 50) {
    const auto n = X.rows();
    if (n < 2) throw ShapeError("t-SNE needs at least 2 rows");
    Matrix D(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        D(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = minkowski_distance(X.row(i), X.row(j), p);
            D(i, j) = D(j, i) = d * d;
        }
    }

    ConditionalAffinities out;
    out.P = Matrix::Zero(n, n);
    out.entropy.resize(static_cast<std::size_t>(n));
    out.beta.resize(static_cast<std::size_t>(n));
    const double target = std::log(perplexity);
    std::vector<double> row(static_cast<std::size_t>(n));

    for (Eigen::Index i = 0; i < n; ++i) {
        double d_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) d_min = std::min(d_min, D(i, j));

        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        double H = 0.0;
        auto evaluate = [&] {
            double sum = 0.0, weighted = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) {
                    row[static_cast<std::size_t>(j)] = 0.0;
                    continue;
                }
                const double shifted = D(i, j) - d_min;
                const double v = std::exp(-beta * shifted);
                row[static_cast<std::size_t>(j)] = v;
                sum += v;
                weighted += shifted * v;
            }
            H = std::log(sum) + beta * weighted / sum;
            for (auto& v : row) v /= sum;
        };
        evaluate();
        for (int step = 0; step < max_steps && std::abs(H - target) > tolerance; ++step) {
            if (H > target) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = lo == 0.0 ? beta / 2.0 : 0.5 * (beta + lo);
            }
            evaluate();
        }
        for (Eigen::Index j = 0; j < n; ++j) out.P(i, j) = row[static_cast<std::size_t>(j)];
        out.entropy[static_cast<std::size_t>(i)] = H;
        out.beta[static_cast<std::size_t>(i)] = beta;
    }
    return out;
}

/// Symmetrized joint affinities (P + P^T) / 2n; sums to 1.
inline Matrix joint_affinities(const Matrix& X, double perplexity, double p = 2.0) {
    const auto cond = conditional_affinities(X, perplexity, p);
    const auto n = static_cast<double>(X.rows());
    return (cond.P + cond.P.transpose()) / (2.0 * n);
}

/// KL(P || Q) with Student-t (one degree of freedom) low-dimensional affinities.
inline double kl_divergence(const Matrix& P, const Matrix& Y) {
    const auto n = Y.rows();
    double z = 0.0;
    Matrix num(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        num(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            num(i, j) = num(j, i) = 1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm());
            z += 2.0 * num(i, j);
        }
    }
    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && P(i, j) > 0.0) kl += P(i, j) * std::log(P(i, j) / (num(i, j) / z));
    return std::max(0.0, kl);
}

/// Exact O(n^2) t-SNE into two dimensions: gradient descent with momentum,
/// per-coordinate adaptive gains and early exaggeration.
inline TsneEmbedding tsne(const Matrix& X, const TsneConfig& cfg = {}) {
    const auto n = X.rows();
    if (!X.allFinite()) throw DataError("t-SNE: data contains non-finite values");
    if (!(cfg.perplexity > 0.0) || !(cfg.perplexity < static_cast<double>(n - 1) / 3.0))
        throw ConfigError("t-SNE perplexity " + std::to_string(cfg.perplexity) + " must be in (0, (n-1)/3) for n = " +
                          std::to_string(n));
    if (!(cfg.minkowski_p >= 1.0)) throw ConfigError("Minkowski exponent must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("t-SNE learning rate must be positive");
    if (cfg.record_every == 0) throw ConfigError("record_every must be positive");

    const Matrix P = joint_affinities(X, cfg.perplexity, cfg.minkowski_p);

    TsneEmbedding out;
    out.config = cfg;
    Rng rng(cfg.seed);
    Matrix Y(n, 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < 2; ++c) Y(i, c) = 1e-4 * rng.normal();

    Matrix update = Matrix::Zero(n, 2);
    Matrix gains = Matrix::Ones(n, 2);
    Matrix grad(n, 2);
    Matrix num(n, n);

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const double exaggeration = it < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
        const double momentum = it < cfg.momentum_switch_iter ? cfg.initial_momentum : cfg.final_momentum;

        double z = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            num(i, i) = 0.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                num(i, j) = num(j, i) = 1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm());
                z += 2.0 * num(i, j);
            }
        }
        grad.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const double mult = (exaggeration * P(i, j) - num(i, j) / z) * num(i, j);
                grad.row(i) += mult * (Y.row(i) - Y.row(j));
            }
        }
        grad *= 4.0;

        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index c = 0; c < 2; ++c) {
                double& g = gains(i, c);
                g = ((grad(i, c) > 0.0) != (update(i, c) > 0.0)) ? g + 0.2 : g * 0.8;
                g = std::max(g, 0.01);
                update(i, c) = momentum * update(i, c) - cfg.learning_rate * g * grad(i, c);
            }
        }
        Y += update;
        Y.rowwise() -= Y.colwise().mean();
        if (!Y.allFinite()) throw Error("t-SNE diverged at iteration " + std::to_string(it + 1));

        if ((it + 1) % cfg.record_every == 0 || it + 1 == cfg.iterations)
            out.kl_trace.push_back({it + 1, kl_divergence(P, Y)});
    }
    out.points = std::move(Y);
    return out;
}

}  // namespace folkdsp::unsup
