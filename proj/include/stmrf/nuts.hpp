#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "stmrf/chain.hpp"
#include "stmrf/random.hpp"
#include "stmrf/targets.hpp"

namespace stmrf {

struct NutsConfig {
  std::size_t n_samples = 20000;
  std::size_t n_warmup = 2000;
  std::uint64_t seed = 0;
  int max_depth = 10;
  double target_accept = 0.8;
  double initial_step_size = 0.1;
  /// Dual averaging.
  double gamma = 0.05;
  double t0 = 10.0;
  double kappa = 0.75;
  /// Windowed diagonal metric adaptation.
  bool adapt_metric = true;
  std::size_t init_buffer = 75;
  std::size_t term_buffer = 50;
  std::size_t base_window = 25;
  /// Energy error above which a trajectory is declared divergent.
  double max_delta_h = 1000.0;
  /// Runs with a larger divergent fraction are flagged.
  double divergence_flag_fraction = 0.2;
};

struct NutsStats {
  double step_size = 0.0;
  std::size_t divergences = 0;
  double mean_tree_depth = 0.0;
  double mean_accept_stat = 0.0;
  std::size_t leapfrog_steps = 0;
  bool flagged = false;
};

struct NutsResult {
  /// Kept draws in unconstrained coordinates, one per row.
  Eigen::MatrixXd draws;
  Eigen::VectorXd inv_metric;
  NutsStats stats;
};

/// Returns log p(theta) and writes its gradient. A thrown NumericalError is
/// treated as an infinitely unlikely point.
using LogDensityFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Multinomial NUTS with the generalized U-turn criterion, dual-averaging
/// step size and windowed diagonal metric adaptation during warm-up.
NutsResult sample_nuts(const LogDensityFn& log_density, Eigen::VectorXd theta0,
                       const NutsConfig& config, Rng& rng);

ChainRecord run_nuts(const TargetPosterior& target, const NutsConfig& config);
ChainRecord run_nuts(const TargetPosterior& target, std::size_t n_samples, std::size_t n_warmup,
                     std::uint64_t seed);

}  // namespace stmrf
