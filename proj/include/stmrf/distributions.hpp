#pragma once

#include <array>
#include <string>
#include <string_view>

#include "stmrf/random.hpp"

namespace stmrf {

/// Student's t with location `mu` and scale-squared `tau2`.
struct StudentT {
  double nu = 1.0;
  double mu = 0.0;
  double tau2 = 1.0;
};

/// Inverse-gamma with shape `a` and scale `b`:
/// p(z) = b^a / Gamma(a) z^(-a-1) exp(-b/z), z > 0.
struct InverseGamma {
  double a = 1.0;
  double b = 1.0;

  double logpdf(double z) const;
  double mean() const;  // b/(a-1); +inf for a <= 1
  double sample(Rng& rng) const;
};

/// Prior on the degrees of freedom. Thresholded gammas are shifted
/// gammas with density in (nu - location); the support floor equals the
/// location for gamma kinds and 0 for the log-normal.
class NuPrior {
 public:
  enum class Kind { Gamma, LogNormal };

  static NuPrior gamma(double shape, double rate, double location = 0.0);
  static NuPrior log_normal(double mu, double sigma);

  /// Ga(2, 0.1), logN(1, 1), Ga_{nu>1}(2, 0.1), Ga_{nu>1}(3, 0.1).
  static NuPrior preset(std::string_view name);
  /// Names accepted by preset(), in order.
  static const std::array<std::string_view, 4>& preset_names();

  Kind kind() const { return kind_; }
  double support_floor() const { return floor_; }
  double param1() const { return p1_; }
  double param2() const { return p2_; }
  double location() const { return loc_; }

  /// Log-density; -inf for nu <= support_floor().
  double logpdf(double nu) const;
  /// d/dnu of logpdf inside the support.
  double dlogpdf(double nu) const;
  /// Mode of the density (shifted-gamma formula for the gamma kinds).
  double mode() const;
  std::string describe() const;

 private:
  NuPrior(Kind kind, double p1, double p2, double loc, double floor)
      : kind_(kind), p1_(p1), p2_(p2), loc_(loc), floor_(floor) {}

  Kind kind_;
  double p1_;  // shape (gamma) or log-mean (log-normal)
  double p2_;  // rate (gamma) or log-std (log-normal)
  double loc_;
  double floor_;
};

double student_t_logpdf(double x, const StudentT& p);
double normal_logpdf(double x, double mean, double var);

/// Exact inverse-gamma draw as the reciprocal of a Gamma(a, rate = b) draw.
double inverse_gamma_sample(double a, double b, Rng& rng);

/// Gaussian-scale-mixture draw: w2 ~ IG(nu/2, nu/2), u ~ N(mu, tau2 w2).
double gsm_student_t_sample(double nu, double mu, double tau2, Rng& rng);

/// Digamma by upward recurrence to x >= 10 and the asymptotic series.
double digamma(double x);

/// log Gamma(x) for x > 0.
double log_gamma(double x);

}  // namespace stmrf
