#include "stmrf/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "stmrf/errors.hpp"

namespace stmrf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw ConfigError("log_gamma: argument must be positive");
  return boost::math::lgamma(x);
}

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ConfigError("digamma: argument must be positive and finite");
  }
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  // Asymptotic series in 1/x^2 with Bernoulli-number coefficients.
  const double r = 1.0 / (x * x);
  const double series =
      r * (1.0 / 12 -
           r * (1.0 / 120 -
                r * (1.0 / 252 -
                     r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r / 12))))));
  return shift + std::log(x) - 0.5 / x - series;
}

double normal_logpdf(double x, double mean, double var) {
  const double z = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * z * z / var;
}

double student_t_logpdf(double x, const StudentT& p) {
  require_positive(p.nu, "nu");
  require_positive(p.tau2, "tau2");
  const double z2 = (x - p.mu) * (x - p.mu) / (p.nu * p.tau2);
  const double log_c = log_gamma(0.5 * (p.nu + 1.0)) - log_gamma(0.5 * p.nu) -
                       0.5 * std::log(std::numbers::pi * p.nu);
  return log_c - 0.5 * std::log(p.tau2) - 0.5 * (p.nu + 1.0) * std::log1p(z2);
}

double InverseGamma::logpdf(double z) const {
  if (!(z > 0.0)) return kNegInf;
  return a * std::log(b) - log_gamma(a) - (a + 1.0) * std::log(z) - b / z;
}

double InverseGamma::mean() const {
  return a > 1.0 ? b / (a - 1.0) : std::numeric_limits<double>::infinity();
}

double InverseGamma::sample(Rng& rng) const { return inverse_gamma_sample(a, b, rng); }

double inverse_gamma_sample(double a, double b, Rng& rng) {
  require_positive(a, "inverse-gamma shape");
  require_positive(b, "inverse-gamma scale");
  // 1/IG(a, b) = Gamma(a, rate b) = Gamma(a, 1) / b.
  const double g = rng.gamma(a);
  return b / g;
}

double gsm_student_t_sample(double nu, double mu, double tau2, Rng& rng) {
  require_positive(nu, "nu");
  require_positive(tau2, "tau2");
  const double w2 = inverse_gamma_sample(0.5 * nu, 0.5 * nu, rng);
  return mu + std::sqrt(tau2 * w2) * rng.normal();
}

NuPrior NuPrior::gamma(double shape, double rate, double location) {
  require_positive(shape, "gamma shape");
  require_positive(rate, "gamma rate");
  if (location < 0.0) throw ConfigError("gamma location must be non-negative");
  return NuPrior(Kind::Gamma, shape, rate, location, location);
}

NuPrior NuPrior::log_normal(double mu, double sigma) {
  require_positive(sigma, "log-normal sigma");
  return NuPrior(Kind::LogNormal, mu, sigma, 0.0, 0.0);
}

const std::array<std::string_view, 4>& NuPrior::preset_names() {
  static const std::array<std::string_view, 4> names{"gamma", "lognormal", "gamma-thr",
                                                     "gamma3-thr"};
  return names;
}

NuPrior NuPrior::preset(std::string_view name) {
  if (name == "gamma") return gamma(2.0, 0.1, 0.0);
  if (name == "lognormal") return log_normal(1.0, 1.0);
  if (name == "gamma-thr") return gamma(2.0, 0.1, 1.0);
  if (name == "gamma3-thr") return gamma(3.0, 0.1, 1.0);
  throw ConfigError("unknown nu prior preset '" + std::string(name) + "'");
}

double NuPrior::logpdf(double nu) const {
  if (!(nu > floor_) || !std::isfinite(nu)) return kNegInf;
  if (kind_ == Kind::Gamma) {
    const double s = nu - loc_;
    return p1_ * std::log(p2_) - log_gamma(p1_) + (p1_ - 1.0) * std::log(s) - p2_ * s;
  }
  const double l = std::log(nu) - p1_;
  return -std::log(nu) - 0.5 * std::log(2.0 * std::numbers::pi * p2_ * p2_) -
         0.5 * l * l / (p2_ * p2_);
}

double NuPrior::dlogpdf(double nu) const {
  if (kind_ == Kind::Gamma) return (p1_ - 1.0) / (nu - loc_) - p2_;
  const double s2 = p2_ * p2_;
  return -1.0 / nu - (std::log(nu) - p1_) / (s2 * nu);
}

double NuPrior::mode() const {
  if (kind_ == Kind::Gamma) return loc_ + std::max(p1_ - 1.0, 0.0) / p2_;
  return std::exp(p1_ - p2_ * p2_);
}

std::string NuPrior::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::Gamma) {
    os << "Ga(shape=" << p1_ << ", rate=" << p2_ << ", location=" << loc_ << ")";
  } else {
    os << "logN(mu=" << p1_ << ", sigma=" << p2_ << ")";
  }
  return os.str();
}

}  // namespace stmrf
