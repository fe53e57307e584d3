#include "stmrf/model.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "stmrf/errors.hpp"

namespace stmrf {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

void check_kernel_args(int n, double sigma) {
  if (n < 3) throw ConfigError("kernel grid size must be at least 3");
  if (!(sigma > 0.0)) throw ConfigError("kernel width must be positive");
}

}  // namespace

Eigen::Index ForwardOperator::rows() const {
  if (const auto* k = std::get_if<Kronecker>(&op_)) return k->outer.rows() * k->inner.rows();
  return std::get<Eigen::MatrixXd>(op_).rows();
}

Eigen::Index ForwardOperator::cols() const {
  if (const auto* k = std::get_if<Kronecker>(&op_)) return k->outer.cols() * k->inner.cols();
  return std::get<Eigen::MatrixXd>(op_).cols();
}

Eigen::VectorXd ForwardOperator::apply(const Eigen::VectorXd& x) const {
  if (x.size() != cols()) throw ConfigError("forward operator: dimension mismatch");
  if (const auto* k = std::get_if<Kronecker>(&op_)) {
    Eigen::Map<const Eigen::MatrixXd> X(x.data(), k->inner.cols(), k->outer.cols());
    Eigen::MatrixXd Y = k->inner * X * k->outer.transpose();
    return Eigen::Map<Eigen::VectorXd>(Y.data(), Y.size());
  }
  return std::get<Eigen::MatrixXd>(op_) * x;
}

Eigen::VectorXd ForwardOperator::apply_transpose(const Eigen::VectorXd& r) const {
  if (r.size() != rows()) throw ConfigError("forward operator: dimension mismatch");
  if (const auto* k = std::get_if<Kronecker>(&op_)) {
    Eigen::Map<const Eigen::MatrixXd> R(r.data(), k->inner.rows(), k->outer.rows());
    Eigen::MatrixXd X = k->inner.transpose() * R * k->outer;
    return Eigen::Map<Eigen::VectorXd>(X.data(), X.size());
  }
  return std::get<Eigen::MatrixXd>(op_).transpose() * r;
}

Eigen::MatrixXd ForwardOperator::gram() const {
  if (const auto* k = std::get_if<Kronecker>(&op_)) {
    return kron(k->outer.transpose() * k->outer, k->inner.transpose() * k->inner);
  }
  const auto& a = std::get<Eigen::MatrixXd>(op_);
  return a.transpose() * a;
}

Eigen::VectorXd ForwardOperator::gram_diagonal() const {
  if (const auto* k = std::get_if<Kronecker>(&op_)) {
    const Eigen::VectorXd outer = k->outer.colwise().squaredNorm().transpose();
    const Eigen::VectorXd inner = k->inner.colwise().squaredNorm().transpose();
    Eigen::VectorXd out(outer.size() * inner.size());
    for (Eigen::Index j = 0; j < outer.size(); ++j) {
      out.segment(j * inner.size(), inner.size()) = outer[j] * inner;
    }
    return out;
  }
  return std::get<Eigen::MatrixXd>(op_).colwise().squaredNorm().transpose();
}

Eigen::MatrixXd ForwardOperator::to_dense() const {
  if (const auto* k = std::get_if<Kronecker>(&op_)) return kron(k->outer, k->inner);
  return std::get<Eigen::MatrixXd>(op_);
}

LinearInverseProblem::LinearInverseProblem(ForwardOperator op, Eigen::VectorXd data,
                                           Geometry geom, double sigma)
    : A(std::move(op)), y(std::move(data)), geometry(geom), kernel_sigma(sigma) {
  if (y.size() != A.rows()) throw ConfigError("data length does not match operator rows");
  if (geometry.dim() != A.cols()) {
    throw ConfigError("geometry dimension does not match operator columns");
  }
}

Eigen::VectorXd midpoint_grid(int n, bool exclude_boundary) {
  const int lo = exclude_boundary ? 1 : 0;
  const int hi = exclude_boundary ? n - 1 : n;
  Eigen::VectorXd t(hi - lo);
  for (int i = lo; i < hi; ++i) t[i - lo] = (i + 0.5) / n;
  return t;
}

Eigen::MatrixXd gaussian_kernel_matrix_at(const Eigen::VectorXd& obs_points, int n_source,
                                          double sigma_domain) {
  if (n_source < 1 || !(sigma_domain > 0.0)) throw ConfigError("invalid kernel arguments");
  Eigen::MatrixXd a(obs_points.size(), n_source);
  const double inv_two_s2 = 1.0 / (2.0 * sigma_domain * sigma_domain);
  for (Eigen::Index j = 0; j < n_source; ++j) {
    const double s = (j + 0.5) / n_source;
    for (Eigen::Index i = 0; i < obs_points.size(); ++i) {
      const double diff = obs_points[i] - s;
      a(i, j) = std::exp(-diff * diff * inv_two_s2) / n_source;
    }
  }
  return a;
}

Eigen::MatrixXd gaussian_kernel_matrix_1d(int n, double sigma, bool exclude_boundary) {
  check_kernel_args(n, sigma);
  return gaussian_kernel_matrix_at(midpoint_grid(n, exclude_boundary), n, sigma / n);
}

Eigen::MatrixXd gaussian_kernel_factor_2d(int n, double sigma) {
  check_kernel_args(n, sigma);
  const double s = sigma / n;
  // Each factor carries 1/(sqrt(2 pi) s) so that kron(K, K) has the 2D
  // normalization 1/(2 pi s^2) and quadrature weight 1/N^2.
  return gaussian_kernel_matrix_at(midpoint_grid(n, false), n, s) /
         (std::sqrt(2.0 * std::numbers::pi) * s);
}

Eigen::MatrixXd gaussian_kernel_matrix_2d(int n, double sigma) {
  const Eigen::MatrixXd k = gaussian_kernel_factor_2d(n, sigma);
  return kron(k, k);
}

ForwardOperator gaussian_blur_operator_2d(int n, double sigma) {
  Eigen::MatrixXd k = gaussian_kernel_factor_2d(n, sigma);
  return ForwardOperator(ForwardOperator::Kronecker{k, k});
}

double log_likelihood(const LinearInverseProblem& problem, const Eigen::VectorXd& x,
                      double sigma2_obs) {
  if (x.size() != problem.d()) throw ConfigError("log_likelihood: dimension mismatch");
  if (!(sigma2_obs > 0.0)) throw ConfigError("log_likelihood: sigma2_obs must be positive");
  const double r2 = (problem.y - problem.A.apply(x)).squaredNorm();
  const double m = static_cast<double>(problem.m());
  return -0.5 * m * std::log(2.0 * std::numbers::pi * sigma2_obs) - 0.5 * r2 / sigma2_obs;
}

Eigen::VectorXd synthesize_data(const Eigen::VectorXd& x_true, const ForwardOperator& A,
                                double sigma_obs_true, std::uint64_t seed) {
  if (sigma_obs_true < 0.0) throw ConfigError("noise std must be non-negative");
  Rng rng(seed);
  Eigen::VectorXd y = A.apply(x_true);
  if (sigma_obs_true > 0.0) y += sigma_obs_true * rng.normal_vector(y.size());
  return y;
}

Eigen::VectorXd scaled_backprojection(const LinearInverseProblem& problem) {
  const Eigen::VectorXd g = problem.A.apply_transpose(problem.y);
  const Eigen::VectorXd ag = problem.A.apply(g);
  const double den = ag.squaredNorm();
  if (!(den > 0.0)) return Eigen::VectorXd::Zero(problem.d());
  return (problem.y.dot(ag) / den) * g;
}

}  // namespace stmrf
