#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "folkdsp/error.hpp"
#include "folkdsp/matrix.hpp"

namespace folkdsp::unsup {

struct PCAModel {
    RowVector mean;                                // d
    Matrix components;                             // n_components x d, orthonormal rows
    std::vector<double> explained_variance;        // eigenvalues, non-increasing
    std::vector<double> explained_variance_ratio;  // eigenvalue / total variance
    std::vector<double> cumulative_variance_ratio;

    std::size_t n_components() const noexcept { return static_cast<std::size_t>(components.rows()); }
    std::size_t dims() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

namespace detail {

struct Eigensystem {
    std::vector<double> values;  // descending, negatives clamped to 0
    Matrix vectors;              // rows are eigenvectors, same order
    double total = 0.0;
};

/// Sample covariance (n - 1 denominator) of the centered data, decomposed
/// with a symmetric eigensolver. Each eigenvector's largest-magnitude entry
/// is made positive.
inline Eigensystem covariance_eigensystem(const Matrix& X, RowVector& mean) {
    if (X.rows() < 2) throw ShapeError("PCA needs at least 2 rows");
    if (!X.allFinite()) throw DataError("PCA: data contains non-finite values");
    mean = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(X.rows() - 1);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("PCA: eigendecomposition failed");

    const auto d = static_cast<std::size_t>(cov.rows());
    Eigensystem es;
    es.vectors.resize(cov.rows(), cov.cols());
    for (std::size_t i = 0; i < d; ++i) {
        const auto src = static_cast<Eigen::Index>(d - 1 - i);  // solver returns ascending order
        es.values.push_back(std::max(0.0, solver.eigenvalues()(src)));
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index peak;
        v.cwiseAbs().maxCoeff(&peak);
        if (v(peak) < 0.0) v = -v;
        es.vectors.row(static_cast<Eigen::Index>(i)) = v.transpose();
    }
    for (double v : es.values) es.total += v;
    if (!(es.total > 0.0)) throw DataError("PCA: data has zero total variance");
    return es;
}

}  // namespace detail

/// Principal axes of the covariance matrix, ordered by explained variance.
inline PCAModel pca_fit(const Matrix& X, std::size_t n_components) {
    if (X.rows() < 2) throw ShapeError("PCA needs at least 2 rows");
    const std::size_t limit = std::min(static_cast<std::size_t>(X.rows()) - 1, static_cast<std::size_t>(X.cols()));
    if (n_components < 1 || n_components > limit)
        throw ShapeError("PCA: n_components must be in [1, " + std::to_string(limit) + "]");

    PCAModel m;
    const auto es = detail::covariance_eigensystem(X, m.mean);
    m.components = es.vectors.topRows(static_cast<Eigen::Index>(n_components));
    double cum = 0.0;
    for (std::size_t i = 0; i < n_components; ++i) {
        m.explained_variance.push_back(es.values[i]);
        m.explained_variance_ratio.push_back(es.values[i] / es.total);
        cum += es.values[i];
        m.cumulative_variance_ratio.push_back(cum / es.total);
    }
    return m;
}

inline Matrix pca_transform(const PCAModel& model, const Matrix& X) {
    if (static_cast<std::size_t>(X.cols()) != model.dims())
        throw ShapeError("PCA model has " + std::to_string(model.dims()) + " dims, data has " + std::to_string(X.cols()));
    return (X.rowwise() - model.mean) * model.components.transpose();
}

/// Maps projections back to the original space (exact with all components).
inline Matrix pca_inverse_transform(const PCAModel& model, const Matrix& Z) {
    if (static_cast<std::size_t>(Z.cols()) != model.n_components()) throw ShapeError("PCA: projection width mismatch");
    return (Z * model.components).rowwise() + model.mean;
}

/// Cumulative explained-variance ratio over all d eigen-directions; ends at 1.
inline std::vector<double> cumulative_variance(const Matrix& X) {
    RowVector mean;
    const auto es = detail::covariance_eigensystem(X, mean);
    std::vector<double> curve;
    double cum = 0.0;
    for (double v : es.values) {
        cum += v;
        curve.push_back(cum / es.total);
    }
    return curve;
}

}  // namespace folkdsp::unsup
