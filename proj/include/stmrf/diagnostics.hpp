#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stmrf/chain.hpp"

namespace stmrf {

struct EssResult {
  double ess = 1.0;
  /// Integrated autocorrelation time n / ess before clipping.
  double iact = 1.0;
  bool degenerate = false;
};

/// Effective sample size with the autocorrelation sum truncated by the
/// initial positive sequence of adjacent-pair sums. Clipped to [1, n].
EssResult effective_sample_size_detail(std::span<const double> chain);
double effective_sample_size(std::span<const double> chain);

/// Normalized autocorrelation for lags 0..max_lag (biased estimator).
Eigen::VectorXd autocorrelation(std::span<const double> chain, int max_lag);

/// Running mean: out[i] = mean(chain[0..i]).
std::vector<double> cumulative_mean(std::span<const double> chain);

/// Rank-normalized split R-hat, the larger of the bulk and folded values.
double split_r_hat(const std::vector<std::vector<double>>& chains);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Shortest interval [s_i, s_{i+g}] over the sorted sample with
/// g = ceil(level n); ties go to the lowest start.
Interval hdi(std::span<const double> samples, double level = 0.95);

/// |x_bar - x_true| / |x_true| in the Euclidean norm.
double relative_error(const Eigen::VectorXd& x_bar, const Eigen::VectorXd& x_true);

struct ScalarSummary {
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
  double n_eff = 0.0;
  double hdi_lo = 0.0;
  double hdi_hi = 0.0;
  /// Split R-hat when at least two chains were given, NaN otherwise.
  double r_hat = 0.0;
};

ScalarSummary summarize_scalar(const std::vector<std::vector<double>>& chains,
                               double level = 0.95);

struct PosteriorSummary {
  Eigen::VectorXd mean, median, std, hdi_lo, hdi_hi;
  /// Per-coordinate ESS (summed over chains).
  Eigen::VectorXd n_eff;
  /// Per-coordinate split R-hat (NaN with one chain).
  Eigen::VectorXd r_hat;
  /// "nu", "tau", "sigma_obs" where sampled.
  std::map<std::string, ScalarSummary> scalar_blocks;
  /// NaN without a reference solution.
  double eps_rel = 0.0;
  /// Maximum R-hat per block ("x", "nu", ...); empty with one chain.
  std::map<std::string, double> r_hat_max;
  std::size_t n_chains = 0;
  std::size_t n_samples_per_chain = 0;
};

/// Pools the chains (equal lengths required) and summarizes every block.
PosteriorSummary summarize(const std::vector<ChainRecord>& chains,
                           const Eigen::VectorXd* x_true = nullptr, double level = 0.95);

/// Derived scalar traces of one chain, keyed like PosteriorSummary's
/// scalar_blocks: tau = sqrt(tau2), sigma_obs = sqrt(sigma2_obs), nu.
std::map<std::string, std::vector<double>> scalar_traces(const ChainRecord& chain);

}  // namespace stmrf
