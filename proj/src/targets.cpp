#include "stmrf/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stmrf/errors.hpp"

namespace stmrf {

namespace {

double ig_dlogpdf(const InverseGamma& ig, double z) {
  return -(ig.a + 1.0) / z + ig.b / (z * z);
}

}  // namespace

PriorKind parse_prior_kind(const std::string& name) {
  if (name == "student-t" || name == "t") return PriorKind::StudentT;
  if (name == "laplace") return PriorKind::Laplace;
  if (name == "cauchy") return PriorKind::Cauchy;
  throw ConfigError("unknown prior kind '" + name + "' (expected student-t, laplace or cauchy)");
}

std::string prior_kind_name(PriorKind kind) {
  switch (kind) {
    case PriorKind::StudentT: return "student-t";
    case PriorKind::Laplace: return "laplace";
    case PriorKind::Cauchy: return "cauchy";
  }
  return "?";
}

LaplacePriorValue laplace_log_prior_and_grad(const Eigen::VectorXd& x, double tau,
                                             const DifferenceOperator& L, double eps, double mu) {
  if (!(tau > 0.0)) throw ConfigError("Laplace scale must be positive");
  if (x.size() != L.d()) throw ConfigError("Laplace prior: dimension mismatch");
  const Eigen::ArrayXd z = L.apply(x).array() - mu;
  const Eigen::ArrayXd s = (z.square() + eps * eps).sqrt();
  const double total = s.sum();
  const double d = static_cast<double>(L.d());
  LaplacePriorValue out;
  out.value = -d * std::log(2.0 * tau) - total / tau;
  out.grad_x = L.L.transpose() * (-(z / s) / tau).matrix();
  out.grad_tau = -d / tau + total / (tau * tau);
  return out;
}

StudentTPriorValue student_t_log_prior_and_grad(const Eigen::VectorXd& x, double tau2, double nu,
                                                const DifferenceOperator& L, double mu) {
  if (!(tau2 > 0.0) || !(nu > 0.0)) throw ConfigError("t prior: tau2 and nu must be positive");
  if (x.size() != L.d()) throw ConfigError("t prior: dimension mismatch");
  const Eigen::ArrayXd z = L.apply(x).array() - mu;
  const Eigen::ArrayXd z2 = z.square();
  const Eigen::ArrayXd denom = nu * tau2 + z2;
  const double k = static_cast<double>(L.k());
  const double sum_log = (z2 / (nu * tau2)).log1p().sum();
  const double half1 = 0.5 * (nu + 1.0);

  StudentTPriorValue out;
  out.value = k * (log_gamma(half1) - log_gamma(0.5 * nu) -
                   0.5 * std::log(std::numbers::pi * nu) - 0.5 * std::log(tau2)) -
              half1 * sum_log;
  out.grad_x = L.L.transpose() * (-(nu + 1.0) * z / denom).matrix();
  out.grad_tau2 = -0.5 * k / tau2 + half1 * (z2 / (tau2 * denom)).sum();
  out.grad_nu = 0.5 * k * (digamma(half1) - digamma(0.5 * nu)) - 0.5 * k / nu - 0.5 * sum_log +
                half1 * (z2 / (nu * denom)).sum();
  return out;
}

TargetPosterior::TargetPosterior(PriorKind kind, const LinearInverseProblem& problem,
                                 const DifferenceOperator& L, NuPrior nu_prior,
                                 InverseGamma scale_hyper, InverseGamma noise_hyper,
                                 double mu_location, double laplace_eps)
    : kind_(kind),
      problem_(problem),
      L_(L),
      nu_prior_(nu_prior),
      scale_hyper_(scale_hyper),
      noise_hyper_(noise_hyper),
      mu_(mu_location),
      eps_(laplace_eps) {
  if (L_.d() != problem_.d()) throw ConfigError("difference operator does not match problem");
  if (!(eps_ > 0.0)) throw ConfigError("Laplace smoothing must be positive");
}

Eigen::Index TargetPosterior::dim() const {
  return problem_.d() + (kind_ == PriorKind::StudentT ? 3 : 2);
}

ConstrainedPoint TargetPosterior::to_constrained(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim()) throw ConfigError("parameter vector has wrong length");
  const Eigen::Index d = problem_.d();
  ConstrainedPoint p;
  p.x = theta.head(d);
  switch (kind_) {
    case PriorKind::StudentT:
      p.tau2 = std::exp(theta[d]);
      p.nu = nu_prior_.support_floor() + std::exp(theta[d + 1]);
      p.sigma2_obs = std::exp(theta[d + 2]);
      break;
    case PriorKind::Cauchy:
      p.tau2 = std::exp(theta[d]);
      p.nu = 1.0;
      p.sigma2_obs = std::exp(theta[d + 1]);
      break;
    case PriorKind::Laplace:
      p.tau2 = std::exp(2.0 * theta[d]);
      p.nu = 0.0;
      p.sigma2_obs = std::exp(theta[d + 1]);
      break;
  }
  return p;
}

Eigen::VectorXd TargetPosterior::to_unconstrained(const ConstrainedPoint& p) const {
  const Eigen::Index d = problem_.d();
  if (p.x.size() != d) throw ConfigError("point has wrong dimension");
  Eigen::VectorXd theta(dim());
  theta.head(d) = p.x;
  switch (kind_) {
    case PriorKind::StudentT:
      theta[d] = std::log(p.tau2);
      theta[d + 1] = std::log(p.nu - nu_prior_.support_floor());
      theta[d + 2] = std::log(p.sigma2_obs);
      break;
    case PriorKind::Cauchy:
      theta[d] = std::log(p.tau2);
      theta[d + 1] = std::log(p.sigma2_obs);
      break;
    case PriorKind::Laplace:
      theta[d] = 0.5 * std::log(p.tau2);
      theta[d + 1] = std::log(p.sigma2_obs);
      break;
  }
  return theta;
}

double TargetPosterior::log_jacobian(const Eigen::VectorXd& theta) const {
  return theta.tail(dim() - problem_.d()).sum();
}

Eigen::VectorXd TargetPosterior::initial_point() const {
  ConstrainedPoint p;
  p.x = scaled_backprojection(problem_);
  const double sd = 0.01 * problem_.y.norm() / std::sqrt(static_cast<double>(problem_.m()));
  p.sigma2_obs = sd > 0.0 ? sd * sd : noise_hyper_.b;
  p.tau2 = 1e-2;
  p.nu = std::max(3.0, nu_prior_.support_floor() + 2.0);
  return to_unconstrained(p);
}

double TargetPosterior::log_density(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd grad;
  return log_density(theta, grad);
}

double TargetPosterior::log_density(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
  const ConstrainedPoint p = to_constrained(theta);
  const Eigen::Index d = problem_.d();
  const double m = static_cast<double>(problem_.m());
  grad.resize(dim());
  for (double v : {p.tau2, p.sigma2_obs}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw NumericalError("scale parameter left the representable range");
    }
  }
  if (kind_ == PriorKind::StudentT && (!(p.nu > nu_prior_.support_floor()) || !std::isfinite(p.nu))) {
    throw NumericalError("degrees of freedom left the representable range");
  }

  const Eigen::VectorXd r = problem_.y - problem_.A.apply(p.x);
  const double r2 = r.squaredNorm();
  const double s2 = p.sigma2_obs;
  double lp = -0.5 * m * std::log(2.0 * std::numbers::pi * s2) - 0.5 * r2 / s2;
  grad.head(d) = problem_.A.apply_transpose(r) / s2;
  double d_s2 = -0.5 * m / s2 + 0.5 * r2 / (s2 * s2);
  lp += noise_hyper_.logpdf(s2);
  d_s2 += ig_dlogpdf(noise_hyper_, s2);
  const Eigen::Index s2_index = dim() - 1;
  grad[s2_index] = s2 * d_s2 + 1.0;
  lp += theta[s2_index];

  switch (kind_) {
    case PriorKind::StudentT:
    case PriorKind::Cauchy: {
      const StudentTPriorValue pr = student_t_log_prior_and_grad(p.x, p.tau2, p.nu, L_, mu_);
      lp += pr.value + scale_hyper_.logpdf(p.tau2) + theta[d];
      grad.head(d) += pr.grad_x;
      grad[d] = p.tau2 * (pr.grad_tau2 + ig_dlogpdf(scale_hyper_, p.tau2)) + 1.0;
      if (kind_ == PriorKind::StudentT) {
        const double shifted = p.nu - nu_prior_.support_floor();
        lp += nu_prior_.logpdf(p.nu) + theta[d + 1];
        grad[d + 1] = shifted * (pr.grad_nu + nu_prior_.dlogpdf(p.nu)) + 1.0;
      }
      break;
    }
    case PriorKind::Laplace: {
      const double tau = std::exp(theta[d]);
      const LaplacePriorValue pr = laplace_log_prior_and_grad(p.x, tau, L_, eps_, mu_);
      lp += pr.value + scale_hyper_.logpdf(tau) + theta[d];
      grad.head(d) += pr.grad_x;
      grad[d] = tau * (pr.grad_tau + ig_dlogpdf(scale_hyper_, tau)) + 1.0;
      break;
    }
  }

  if (!std::isfinite(lp)) throw NumericalError("log-posterior is not finite");
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      std::ostringstream os;
      os << "log-posterior gradient component " << i << " is not finite";
      throw NumericalError(os.str());
    }
  }
  return lp;
}

}  // namespace stmrf
