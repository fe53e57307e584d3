#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "stmrf/random.hpp"

namespace stmrf {

/// Discretization of the unknown: a line of N nodes or an N x N grid
/// (column-major vectorization, pixel (i, j) at index i + N j).
struct Geometry {
  enum class Kind { Line, Grid };
  Kind kind = Kind::Line;
  int n = 0;

  static Geometry line(int n) { return {Kind::Line, n}; }
  static Geometry grid(int n) { return {Kind::Grid, n}; }

  /// Number of unknowns: N for a line, N^2 for a grid.
  Eigen::Index dim() const {
    return kind == Kind::Line ? n : static_cast<Eigen::Index>(n) * n;
  }
  bool operator==(const Geometry&) const = default;
};

/// Linear forward map, held either as a dense matrix or as a Kronecker
/// product kron(outer, inner). The Kronecker form acts on a column-major
/// image X as inner * X * outer^T and never materializes the full matrix.
class ForwardOperator {
 public:
  struct Kronecker {
    Eigen::MatrixXd outer;
    Eigen::MatrixXd inner;
  };

  ForwardOperator() = default;
  explicit ForwardOperator(Eigen::MatrixXd dense) : op_(std::move(dense)) {}
  explicit ForwardOperator(Kronecker kron) : op_(std::move(kron)) {}

  Eigen::Index rows() const;
  Eigen::Index cols() const;
  bool is_kronecker() const { return std::holds_alternative<Kronecker>(op_); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& r) const;
  /// Dense A^T A. Quadratic in cols(); intended for moderate sizes.
  Eigen::MatrixXd gram() const;
  /// diag(A^T A) without forming the Gram matrix.
  Eigen::VectorXd gram_diagonal() const;
  Eigen::MatrixXd to_dense() const;

 private:
  std::variant<Eigen::MatrixXd, Kronecker> op_;
};

struct LinearInverseProblem {
  ForwardOperator A;
  Eigen::VectorXd y;
  Geometry geometry;
  /// Kernel width in grid-index units of the data grid.
  double kernel_sigma = 0.0;

  LinearInverseProblem(ForwardOperator op, Eigen::VectorXd data, Geometry geom,
                       double sigma = 0.0);

  Eigen::Index m() const { return A.rows(); }
  Eigen::Index d() const { return A.cols(); }
};

/// c * A^T y with the scalar c minimizing |y - c A A^T y|, i.e. one exact
/// steepest-descent step on the data misfit from x = 0.
Eigen::VectorXd scaled_backprojection(const LinearInverseProblem& problem);

/// Noise variance with its inverse-gamma hyperprior IG(hyper_a, hyper_b).
struct NoiseModel {
  double sigma2_obs = 1.0;
  double hyper_a = 1.0;
  double hyper_b = 1e-4;
};

struct TruthBundle {
  Eigen::VectorXd x_true;
  double sigma_obs_true = 0.0;
  std::uint64_t seed = 0;
};

/// Midpoint-rule discretization of the 1D Gaussian-kernel integral operator
/// on [0, 1]: A_ij = (1/N) exp(-(t_i - s_j)^2 / (2 s^2)), s_j = (j - 1/2)/N,
/// with s = sigma/N (sigma in grid-index units). With exclude_boundary the
/// first and last observation rows are dropped (m = N - 2).
Eigen::MatrixXd gaussian_kernel_matrix_1d(int n, double sigma, bool exclude_boundary);

/// Same kernel evaluated at arbitrary observation points for a source grid
/// of `n_source` midpoint nodes. `sigma_domain` is the width in [0, 1] units.
Eigen::MatrixXd gaussian_kernel_matrix_at(const Eigen::VectorXd& obs_points, int n_source,
                                          double sigma_domain);

/// Observation points of the N-point data grid, optionally without the two
/// boundary points.
Eigen::VectorXd midpoint_grid(int n, bool exclude_boundary);

/// Normalized 1D factor K with K_ij = (1/N) g(t_i - s_j), g the Gaussian
/// density of width sigma/N. kron(K, K) is the 2D blur.
Eigen::MatrixXd gaussian_kernel_factor_2d(int n, double sigma);

/// Dense N^2 x N^2 2D blur matrix kron(K, K).
Eigen::MatrixXd gaussian_kernel_matrix_2d(int n, double sigma);

/// The same 2D blur in Kronecker form.
ForwardOperator gaussian_blur_operator_2d(int n, double sigma);

/// Gaussian log-likelihood log N(y; A x, sigma2_obs I).
double log_likelihood(const LinearInverseProblem& problem, const Eigen::VectorXd& x,
                      double sigma2_obs);

/// y = A x_true + e, e ~ N(0, sigma_obs_true^2 I), reproducible from seed.
Eigen::VectorXd synthesize_data(const Eigen::VectorXd& x_true, const ForwardOperator& A,
                                double sigma_obs_true, std::uint64_t seed);

}  // namespace stmrf
