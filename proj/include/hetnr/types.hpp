#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hetnr {

using Index = Eigen::Index;

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Row-major throughout: operator rows are anchor nodes and the hot loop is
// sparse-row times dense.
template <class Scalar>
using SparseMat = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, Index>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using SparseMatd = SparseMat<double>;

}  // namespace hetnr
