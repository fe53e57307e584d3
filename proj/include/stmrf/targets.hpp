#pragma once

#include <Eigen/Core>

#include "stmrf/distributions.hpp"
#include "stmrf/model.hpp"
#include "stmrf/operators.hpp"

namespace stmrf {

enum class PriorKind { StudentT, Laplace, Cauchy };

PriorKind parse_prior_kind(const std::string& name);
std::string prior_kind_name(PriorKind kind);

/// Parameters in constrained space.
struct ConstrainedPoint {
  Eigen::VectorXd x;
  double sigma2_obs = 1.0;
  /// tau^2 for the t and Cauchy priors; tau itself is sqrt of this for Laplace.
  double tau2 = 1.0;
  double nu = 1.0;
};

/// Joint posterior over x and the scalar hyperparameters, without the
/// scale-mixture augmentation. Unconstrained coordinates:
///   t:       [x, log tau2, log(nu - floor), log sigma2_obs]
///   Cauchy:  [x, log tau2, log sigma2_obs]
///   Laplace: [x, log tau,  log sigma2_obs]
/// The problem and operator must outlive the target.
class TargetPosterior {
 public:
  TargetPosterior(PriorKind kind, const LinearInverseProblem& problem,
                  const DifferenceOperator& L, NuPrior nu_prior = NuPrior::preset("gamma-thr"),
                  InverseGamma scale_hyper = {1.0, 1e-4}, InverseGamma noise_hyper = {1.0, 1e-4},
                  double mu_location = 0.0, double laplace_eps = 1e-8);

  PriorKind kind() const { return kind_; }
  Eigen::Index dim() const;
  Eigen::Index x_dim() const { return problem_.d(); }
  const NuPrior& nu_prior() const { return nu_prior_; }
  const InverseGamma& scale_hyper() const { return scale_hyper_; }
  const InverseGamma& noise_hyper() const { return noise_hyper_; }
  double mu_location() const { return mu_; }
  double laplace_eps() const { return eps_; }

  /// Log-density in unconstrained coordinates (log-Jacobians included) and
  /// its gradient. Throws NumericalError naming the first non-finite
  /// gradient component.
  double log_density(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const;
  double log_density(const Eigen::VectorXd& theta) const;

  ConstrainedPoint to_constrained(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd to_unconstrained(const ConstrainedPoint& p) const;
  /// log |d constrained / d theta| of the scalar transforms.
  double log_jacobian(const Eigen::VectorXd& theta) const;

  /// Starting point matching the Gibbs initialization.
  Eigen::VectorXd initial_point() const;

 private:
  PriorKind kind_;
  const LinearInverseProblem& problem_;
  const DifferenceOperator& L_;
  NuPrior nu_prior_;
  InverseGamma scale_hyper_;
  InverseGamma noise_hyper_;
  double mu_;
  double eps_;
};

/// Smoothed Laplace difference prior
///   -d log(2 tau) - sum_i sqrt(([Lx]_i - mu)^2 + eps^2) / tau
/// with gradients in x and tau.
struct LaplacePriorValue {
  double value = 0.0;
  Eigen::VectorXd grad_x;
  double grad_tau = 0.0;
};
LaplacePriorValue laplace_log_prior_and_grad(const Eigen::VectorXd& x, double tau,
                                             const DifferenceOperator& L, double eps = 1e-8,
                                             double mu = 0.0);

/// log p(Lx | tau2, nu) for the product-form t prior on the k differences,
/// with partial derivatives.
struct StudentTPriorValue {
  double value = 0.0;
  Eigen::VectorXd grad_x;
  double grad_tau2 = 0.0;
  double grad_nu = 0.0;
};
StudentTPriorValue student_t_log_prior_and_grad(const Eigen::VectorXd& x, double tau2, double nu,
                                                const DifferenceOperator& L, double mu = 0.0);

}  // namespace stmrf
