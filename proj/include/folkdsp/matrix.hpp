#pragma once

#include <Eigen/Dense>

namespace folkdsp {

/// Dense row-major matrix; rows are observations / frames throughout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

}  // namespace folkdsp
