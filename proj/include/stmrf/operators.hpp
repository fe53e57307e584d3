#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "stmrf/model.hpp"

namespace stmrf {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// First-order forward differences with a zero boundary condition.
///
/// 1D: L = D, lower bidiagonal with +1 on the diagonal and -1 below it, so
/// row 0 is the boundary difference x_0 - 0. 2D: L = [I (x) D; D (x) I],
/// k = 2d rows; rows 0..d-1 difference along the first image index and
/// rows d..2d-1 along the second.
///
/// With this boundary row D^T D is full rank (unlike the rank d-1
/// precision of an intrinsic first-order field).
struct DifferenceOperator {
  Geometry geometry;
  SparseRowMatrix L;

  Eigen::Index k() const { return L.rows(); }
  Eigen::Index d() const { return L.cols(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return L * x; }
};

DifferenceOperator build_difference_operator(const Geometry& geometry);

/// Lambda = L^T W L with W = diag(1 / (tau2 w2_i)).
struct PrecisionMatrix {
  SparseMatrix lambda;
  double tau2 = 1.0;
  Eigen::VectorXd w2;
};

PrecisionMatrix assemble_precision(const DifferenceOperator& L, double tau2,
                                   const Eigen::VectorXd& w2);

/// L^T diag(weights) L assembled directly in sparse form.
SparseMatrix weighted_normal_matrix(const DifferenceOperator& L,
                                    const Eigen::VectorXd& weights);

}  // namespace stmrf
