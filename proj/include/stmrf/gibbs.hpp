#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "stmrf/chain.hpp"
#include "stmrf/distributions.hpp"
#include "stmrf/gaussian_conditional.hpp"
#include "stmrf/model.hpp"
#include "stmrf/operators.hpp"
#include "stmrf/random.hpp"

namespace stmrf {

/// Blocks of the random-scan Gibbs sampler, in selection order.
enum class Block : int { X = 0, Sigma2 = 1, Tau2 = 2, W2 = 3, Nu = 4 };
inline constexpr int kNumBlocks = 5;

enum class XSampler { Cholesky, PerturbCg };

/// Vanishing adaptation of the RWM scale on log(nu - floor):
/// log s <- log s + t^(-kappa) (alpha_t - target).
struct RwmAdaptation {
  double initial_scale = 0.5;
  double kappa = 0.6;
  double target_accept = 0.44;
};

struct GibbsConfig {
  std::size_t n_samples = 20000;
  std::size_t n_burnin = 2000;
  std::size_t n_thin = 20;
  /// RWM steps discarded inside each nu update; nu_warmup + 1 steps run.
  std::size_t nu_warmup = 100;
  std::uint64_t seed = 0;
  NuPrior nu_prior = NuPrior::preset("gamma-thr");
  InverseGamma scale_hyper{1.0, 1e-4};
  InverseGamma noise_hyper{1.0, 1e-4};
  double mu_location = 0.0;
  XSampler x_sampler = XSampler::Cholesky;
  CgOptions cg{1e-8, 20000};
  RwmAdaptation rwm;
  /// Inactive blocks are still selected by the scan but left unchanged.
  std::array<bool, kNumBlocks> active{true, true, true, true, true};
  bool record_w2 = true;
  /// Lower clamp on w2 before forming 1/(tau2 w2).
  double w2_floor = 1e-12;

  std::size_t total_iterations() const { return n_burnin + n_samples * n_thin; }
};

struct GibbsState {
  Eigen::VectorXd x;
  double sigma2_obs = 1.0;
  double tau2 = 1.0;
  Eigen::VectorXd w2;
  double nu = 3.0;
  double rwm_log_scale = 0.0;
  std::size_t rwm_accept_count = 0;
  std::size_t rwm_proposal_count = 0;
  std::size_t rwm_adapt_steps = 0;
  /// 1-based index of the iteration being executed; 0 before the first.
  std::size_t iteration = 0;
};

struct GibbsCounters {
  std::array<std::size_t, kNumBlocks> block_counts{};
  std::size_t w2_clamp_events = 0;
  std::size_t degenerate_scale_events = 0;
  std::size_t cg_iterations = 0;
  std::size_t x_updates = 0;
};

/// Random-scan Gibbs sampler for p(x, sigma2_obs, tau2, w2, nu | y) under the
/// Gaussian-scale-mixture form of the Student's t difference prior.
class GibbsSampler {
 public:
  GibbsSampler(const LinearInverseProblem& problem, const DifferenceOperator& L,
               GibbsConfig config);

  const GibbsConfig& config() const { return config_; }
  const GibbsCounters& counters() const { return counters_; }

  /// x = scaled_backprojection, sigma2 = (0.01 |y| / sqrt m)^2,
  /// tau2 = 1e-2, w2 = 1, nu = 3.
  GibbsState initial_state() const;

  InverseGamma sigma2_conditional(const GibbsState& s) const;
  InverseGamma tau2_conditional(const GibbsState& s) const;
  /// Conditional of each w2_i; element i of the returned shapes/scales.
  std::pair<double, Eigen::VectorXd> w2_conditional(const GibbsState& s) const;
  /// Unnormalized log p(nu | w2).
  double nu_log_conditional(double nu, const Eigen::VectorXd& w2) const;
  /// Terms of the Gaussian x-conditional at the current scales.
  ConditionalTerms conditional_terms(const GibbsState& s);

  void update_x(GibbsState& s, Rng& rng);
  void update_sigma2_obs(GibbsState& s, Rng& rng);
  void update_tau2(GibbsState& s, Rng& rng);
  void update_w2(GibbsState& s, Rng& rng);
  /// nu_warmup + 1 RWM steps on log(nu - floor), keeping the last state.
  /// With adapt set, each step updates the proposal scale.
  void update_nu(GibbsState& s, Rng& rng, bool adapt);

  /// One random-scan iteration; returns the block that was drawn.
  Block step(GibbsState& s, Rng& rng);

  /// Full run from the initial state with the configured seed.
  ChainRecord run();
  ChainRecord run(GibbsState state, Rng& rng);

 private:
  double draw_ig(const InverseGamma& ig, Rng& rng);

  const LinearInverseProblem& problem_;
  const DifferenceOperator& L_;
  GibbsConfig config_;
  Eigen::VectorXd aty_;
  Eigen::VectorXd gram_diag_;
  std::optional<SparseMatrix> gram_;
  CholeskySampler cholesky_;
  GibbsCounters counters_;
};

ChainRecord run_gibbs(const LinearInverseProblem& problem, const DifferenceOperator& L,
                      const GibbsConfig& config);

}  // namespace stmrf
