#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "folkdsp/error.hpp"
#include "folkdsp/matrix.hpp"
#include "folkdsp/rng.hpp"

namespace folkdsp::unsup {

struct KMeansConfig {
    std::uint64_t seed = 0;
    std::size_t max_iter = 300;
    std::size_t n_restarts = 10;
};

struct ClusterResult {
    std::vector<int> assignments;
    Matrix centroids;  // k x d
    double inertia = 0.0;
    std::size_t n_iterations = 0;
    /// Objective after each assignment step of the winning restart.
    std::vector<double> inertia_trace;

    std::size_t k() const noexcept { return static_cast<std::size_t>(centroids.rows()); }
};

/// Sum of squared Euclidean distances from each row to its assigned centroid.
inline double inertia(const Matrix& X, std::span<const int> assignments, const Matrix& centroids) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        total += (X.row(i) - centroids.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
    return total;
}

namespace detail {

/// Distance-weighted seeding: first center uniform, then each next center
/// drawn with probability proportional to squared distance to the nearest
/// chosen center (uniform if all distances vanish).
inline Matrix seed_centroids(const Matrix& X, std::size_t k, Rng& rng) {
    const auto n = static_cast<std::size_t>(X.rows());
    Matrix C(static_cast<Eigen::Index>(k), X.cols());
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    C.row(0) = X.row(static_cast<Eigen::Index>(first));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = (X.row(static_cast<Eigen::Index>(i)) - C.row(0)).squaredNorm();
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.below(n));
        }
        C.row(static_cast<Eigen::Index>(c)) = X.row(static_cast<Eigen::Index>(pick));
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], (X.row(static_cast<Eigen::Index>(i)) - C.row(static_cast<Eigen::Index>(c))).squaredNorm());
    }
    return C;
}

/// Nearest centroid per row (lowest index on ties); returns the objective.
inline double assign(const Matrix& X, const Matrix& C, std::vector<int>& labels, std::vector<double>& dist) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < C.rows(); ++c) {
            const double d = (X.row(i) - C.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[static_cast<std::size_t>(i)] = best;
        dist[static_cast<std::size_t>(i)] = best_d;
        total += best_d;
    }
    return total;
}

inline ClusterResult lloyd(const Matrix& X, std::size_t k, std::size_t max_iter, Rng& rng) {
    const auto n = static_cast<std::size_t>(X.rows());
    ClusterResult r;
    r.centroids = seed_centroids(X, k, rng);
    r.assignments.assign(n, -1);
    std::vector<int> labels(n);
    std::vector<double> dist(n);

    for (std::size_t it = 0; it < std::max<std::size_t>(1, max_iter); ++it) {
        const double obj = assign(X, r.centroids, labels, dist);
        r.inertia_trace.push_back(obj);
        r.n_iterations = it + 1;
        const bool converged = labels == r.assignments;
        r.assignments = labels;
        r.inertia = obj;
        if (converged) break;

        Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), X.cols());
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(labels[i]) += X.row(static_cast<Eigen::Index>(i));
            ++sizes[static_cast<std::size_t>(labels[i])];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) {
                r.centroids.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
            } else {
                // Empty cluster: move it onto the point farthest from its centroid.
                const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
                r.centroids.row(static_cast<Eigen::Index>(c)) = X.row(static_cast<Eigen::Index>(far));
                dist[far] = 0.0;
            }
        }
    }
    return r;
}

}  // namespace detail

/// Lloyd's algorithm from distance-weighted seeding; the restart with the
/// lowest inertia wins (earliest on ties). Restart r uses substream (seed, r).
inline ClusterResult kmeans(const Matrix& X, std::size_t k, const KMeansConfig& cfg = {}) {
    if (k < 1) throw ShapeError("kmeans: k must be >= 1");
    if (k > static_cast<std::size_t>(X.rows()))
        throw ShapeError("kmeans: k = " + std::to_string(k) + " exceeds " + std::to_string(X.rows()) + " rows");
    if (!X.allFinite()) throw DataError("kmeans: data contains non-finite values");

    ClusterResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(1, cfg.n_restarts); ++r) {
        Rng rng = Rng::derive(cfg.seed, r);
        auto result = detail::lloyd(X, k, cfg.max_iter, rng);
        if (result.inertia < best.inertia) best = std::move(result);
    }
    return best;
}

/// Per-sample silhouette (b - a) / max(a, b) with Euclidean distances.
/// Members of singleton clusters score 0, as does a = b = 0.
inline std::vector<double> silhouette_samples(const Matrix& X, std::span<const int> labels) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (labels.size() != n) throw ShapeError("silhouette: label count differs from row count");
    std::set<int> ids(labels.begin(), labels.end());
    if (ids.size() < 2) throw InvalidClustering("silhouette needs at least 2 non-empty clusters");
    std::vector<int> index(ids.begin(), ids.end());
    auto slot = [&](int label) {
        return static_cast<std::size_t>(std::lower_bound(index.begin(), index.end(), label) - index.begin());
    };
    std::vector<std::size_t> size(index.size(), 0);
    for (int l : labels) ++size[slot(l)];

    std::vector<double> s(n, 0.0);
    std::vector<double> sum(index.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sum[slot(labels[j])] += (X.row(static_cast<Eigen::Index>(i)) - X.row(static_cast<Eigen::Index>(j))).norm();
        const std::size_t own = slot(labels[i]);
        if (size[own] <= 1) continue;
        const double a = sum[own] / static_cast<double>(size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < index.size(); ++c)
            if (c != own) b = std::min(b, sum[c] / static_cast<double>(size[c]));
        const double denom = std::max(a, b);
        s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return s;
}

inline double silhouette(const Matrix& X, std::span<const int> labels) {
    const auto s = silhouette_samples(X, labels);
    double total = 0.0;
    for (double v : s) total += v;
    return total / static_cast<double>(s.size());
}

struct ChooseKRow {
    std::size_t k = 0;
    double inertia = 0.0;
    double silhouette = 0.0;
};

/// k-means plus mean silhouette for every k in [k_min, k_max], all with the same seed.
inline std::vector<ChooseKRow> choose_k(const Matrix& X, std::size_t k_min, std::size_t k_max,
                                        const KMeansConfig& cfg = {}) {
    if (k_min < 2 || k_max < k_min || k_max > static_cast<std::size_t>(X.rows()))
        throw ShapeError("choose_k: k range must lie within [2, n_rows]");
    std::vector<ChooseKRow> table;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        const auto r = kmeans(X, k, cfg);
        table.push_back({k, r.inertia, silhouette(X, r.assignments)});
    }
    return table;
}

/// k with the highest silhouette (smallest k on ties).
inline std::size_t best_k(const std::vector<ChooseKRow>& table) {
    const auto it = std::max_element(table.begin(), table.end(),
                                     [](const auto& a, const auto& b) { return a.silhouette < b.silhouette; });
    return it == table.end() ? 0 : it->k;
}

}  // namespace folkdsp::unsup
