#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace m2hgcl {

/// Dense row-major matrix used for features, activations and parameters.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Constant sparse operator (normalized adjacencies).
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

}  // namespace m2hgcl
