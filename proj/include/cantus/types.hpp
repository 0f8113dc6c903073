#pragma once

#include <Eigen/Dense>

namespace cantus {

// Frame-major storage: one row per frame, one column per feature.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

}  // namespace cantus
