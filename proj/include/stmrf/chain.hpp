#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <Eigen/Core>

namespace stmrf {

/// Kept post-burn-in states of one chain. Row j of each matrix is the j-th
/// kept sample. Blocks a sampler does not infer are left empty (size 0).
struct ChainRecord {
  std::string sampler;  // "gibbs" or "nuts"
  std::string prior;    // "student-t", "laplace" or "cauchy"
  Eigen::MatrixXd x_samples;
  Eigen::VectorXd sigma2_samples;
  /// tau^2 for the t and Cauchy priors, tau^2 of the Laplace scale tau.
  Eigen::VectorXd tau2_samples;
  Eigen::VectorXd nu_samples;
  Eigen::MatrixXd w2_samples;
  std::uint64_t seed = 0;
  double wall_time_seconds = 0.0;
  /// Every setting that affected the run, as text.
  std::map<std::string, std::string> config_echo;
  /// Sampler statistics: acceptance rates, counters, step sizes.
  std::map<std::string, double> stats;

  Eigen::Index n_samples() const { return x_samples.rows(); }
  Eigen::Index dim() const { return x_samples.cols(); }
};

}  // namespace stmrf
