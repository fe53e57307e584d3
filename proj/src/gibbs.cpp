#include "stmrf/gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseCore>

#include "stmrf/errors.hpp"

namespace stmrf {

namespace {

std::string to_text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const char* block_name(Block b) {
  switch (b) {
    case Block::X: return "x";
    case Block::Sigma2: return "sigma2_obs";
    case Block::Tau2: return "tau2";
    case Block::W2: return "w2";
    case Block::Nu: return "nu";
  }
  return "?";
}

}  // namespace

GibbsSampler::GibbsSampler(const LinearInverseProblem& problem, const DifferenceOperator& L,
                           GibbsConfig config)
    : problem_(problem), L_(L), config_(std::move(config)) {
  if (L_.d() != problem_.d()) throw ConfigError("difference operator does not match problem");
  if (config_.n_thin == 0) throw ConfigError("thinning must be at least 1");
  if (!(config_.scale_hyper.a > 0 && config_.scale_hyper.b > 0 && config_.noise_hyper.a > 0 &&
        config_.noise_hyper.b > 0)) {
    throw ConfigError("hyperprior parameters must be positive");
  }
  aty_ = problem_.A.apply_transpose(problem_.y);
  gram_diag_ = problem_.A.gram_diagonal();
  if (config_.x_sampler == XSampler::Cholesky) {
    const Eigen::MatrixXd g = problem_.A.gram();
    gram_ = g.sparseView(0.0, 0.0);
    gram_->makeCompressed();
  }
}

GibbsState GibbsSampler::initial_state() const {
  GibbsState s;
  const double m = static_cast<double>(problem_.m());
  s.x = scaled_backprojection(problem_);
  const double sd = 0.01 * problem_.y.norm() / std::sqrt(m);
  s.sigma2_obs = sd > 0.0 ? sd * sd : config_.noise_hyper.b;
  s.tau2 = 1e-2;
  s.w2 = Eigen::VectorXd::Ones(L_.k());
  s.nu = 3.0;
  if (!(s.nu > config_.nu_prior.support_floor())) s.nu = config_.nu_prior.support_floor() + 2.0;
  s.rwm_log_scale = std::log(config_.rwm.initial_scale);
  return s;
}

InverseGamma GibbsSampler::sigma2_conditional(const GibbsState& s) const {
  const double r2 = (problem_.y - problem_.A.apply(s.x)).squaredNorm();
  return {0.5 * static_cast<double>(problem_.m()) + config_.noise_hyper.a,
          0.5 * r2 + config_.noise_hyper.b};
}

InverseGamma GibbsSampler::tau2_conditional(const GibbsState& s) const {
  const Eigen::ArrayXd u = (L_.apply(s.x).array() - config_.mu_location);
  const double scale = (u.square() / (2.0 * s.w2.array())).sum();
  return {0.5 * static_cast<double>(L_.k()) + config_.scale_hyper.a,
          scale + config_.scale_hyper.b};
}

std::pair<double, Eigen::VectorXd> GibbsSampler::w2_conditional(const GibbsState& s) const {
  const Eigen::ArrayXd u = (L_.apply(s.x).array() - config_.mu_location);
  Eigen::VectorXd scales = (u.square() / (2.0 * s.tau2) + 0.5 * s.nu).matrix();
  return {0.5 * (s.nu + 1.0), std::move(scales)};
}

double GibbsSampler::nu_log_conditional(double nu, const Eigen::VectorXd& w2) const {
  const double lp = config_.nu_prior.logpdf(nu);
  if (!std::isfinite(lp)) return lp;
  const double k = static_cast<double>(w2.size());
  const double s_log = w2.array().log().sum();
  const double s_inv = w2.array().inverse().sum();
  const double half = 0.5 * nu;
  return lp + k * (half * std::log(half) - log_gamma(half)) - (half + 1.0) * s_log -
         half * s_inv;
}

ConditionalTerms GibbsSampler::conditional_terms(const GibbsState& s) {
  Eigen::VectorXd weights(L_.k());
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    double w = s.w2[i];
    if (w < config_.w2_floor) {
      w = config_.w2_floor;
      ++counters_.w2_clamp_events;
    }
    weights[i] = 1.0 / (s.tau2 * w);
  }
  return ConditionalTerms{problem_.A, problem_.y, L_, s.sigma2_obs, std::move(weights),
                          config_.mu_location};
}

double GibbsSampler::draw_ig(const InverseGamma& ig_in, Rng& rng) {
  InverseGamma ig = ig_in;
  if (!(ig.b > 0.0) || !std::isfinite(ig.b)) {
    ++counters_.degenerate_scale_events;
    ig.b = config_.scale_hyper.b;
  }
  double v = inverse_gamma_sample(ig.a, ig.b, rng);
  if (!(v > 0.0) || !std::isfinite(v)) {
    ++counters_.degenerate_scale_events;
    v = std::clamp(v, std::numeric_limits<double>::min(), std::numeric_limits<double>::max());
    if (std::isnan(v)) v = ig.b / ig.a;
  }
  return v;
}

void GibbsSampler::update_x(GibbsState& s, Rng& rng) {
  const ConditionalTerms terms = conditional_terms(s);
  if (config_.x_sampler == XSampler::Cholesky) {
    s.x = cholesky_.sample(terms.assemble(*gram_), rng);
  } else {
    CgResult r = sample_x_perturb_cg(terms, gram_diag_, rng, config_.cg, &s.x);
    counters_.cg_iterations += static_cast<std::size_t>(r.iterations);
    s.x = std::move(r.x);
  }
  ++counters_.x_updates;
}

void GibbsSampler::update_sigma2_obs(GibbsState& s, Rng& rng) {
  s.sigma2_obs = draw_ig(sigma2_conditional(s), rng);
}

void GibbsSampler::update_tau2(GibbsState& s, Rng& rng) {
  s.tau2 = draw_ig(tau2_conditional(s), rng);
}

void GibbsSampler::update_w2(GibbsState& s, Rng& rng) {
  const auto [shape, scales] = w2_conditional(s);
  for (Eigen::Index i = 0; i < scales.size(); ++i) {
    s.w2[i] = draw_ig(InverseGamma{shape, scales[i]}, rng);
  }
}

void GibbsSampler::update_nu(GibbsState& s, Rng& rng, bool adapt) {
  const double floor = config_.nu_prior.support_floor();
  const double k = static_cast<double>(s.w2.size());
  const double s_log = s.w2.array().log().sum();
  const double s_inv = s.w2.array().inverse().sum();
  // Log-target on eta = log(nu - floor), Jacobian included.
  auto target = [&](double eta) {
    const double nu = floor + std::exp(eta);
    const double lp = config_.nu_prior.logpdf(nu);
    if (!std::isfinite(lp) || !(nu > floor)) return -std::numeric_limits<double>::infinity();
    const double half = 0.5 * nu;
    return lp + k * (half * std::log(half) - log_gamma(half)) - (half + 1.0) * s_log -
           half * s_inv + eta;
  };
  if (!(s.nu > floor)) throw NumericalError("nu left its support");
  double eta = std::log(s.nu - floor);
  double current = target(eta);
  if (!std::isfinite(current)) {
    std::ostringstream os;
    os << "non-finite nu log-target at nu = " << s.nu;
    throw NumericalError(os.str());
  }
  for (std::size_t step = 0; step <= config_.nu_warmup; ++step) {
    const double proposal = eta + std::exp(s.rwm_log_scale) * rng.normal();
    const double cand = target(proposal);
    const double log_alpha = std::isfinite(cand) ? cand - current
                                                  : -std::numeric_limits<double>::infinity();
    ++s.rwm_proposal_count;
    if (std::log(rng.uniform()) < log_alpha) {
      eta = proposal;
      current = cand;
      ++s.rwm_accept_count;
    }
    if (adapt) {
      ++s.rwm_adapt_steps;
      const double alpha = log_alpha >= 0.0 ? 1.0 : std::exp(log_alpha);
      s.rwm_log_scale += std::pow(static_cast<double>(s.rwm_adapt_steps), -config_.rwm.kappa) *
                         (alpha - config_.rwm.target_accept);
    }
  }
  s.nu = floor + std::exp(eta);
}

Block GibbsSampler::step(GibbsState& s, Rng& rng) {
  const auto block = static_cast<Block>(rng.uniform_int(0, kNumBlocks - 1));
  ++counters_.block_counts[static_cast<int>(block)];
  if (!config_.active[static_cast<int>(block)]) return block;
  switch (block) {
    case Block::X: update_x(s, rng); break;
    case Block::Sigma2: update_sigma2_obs(s, rng); break;
    case Block::Tau2: update_tau2(s, rng); break;
    case Block::W2: update_w2(s, rng); break;
    case Block::Nu: update_nu(s, rng, s.iteration <= config_.n_burnin); break;
  }
  return block;
}

ChainRecord GibbsSampler::run() {
  Rng rng(config_.seed);
  return run(initial_state(), rng);
}

ChainRecord GibbsSampler::run(GibbsState s, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto n_s = static_cast<Eigen::Index>(config_.n_samples);
  const Eigen::Index d = problem_.d();
  const Eigen::Index k = L_.k();

  ChainRecord rec;
  rec.sampler = "gibbs";
  rec.prior = "student-t";
  rec.seed = config_.seed;
  rec.x_samples.resize(n_s, d);
  rec.sigma2_samples.resize(n_s);
  rec.tau2_samples.resize(n_s);
  rec.nu_samples.resize(n_s);
  if (config_.record_w2) rec.w2_samples.resize(n_s, k);

  const std::size_t total = config_.total_iterations();
  Eigen::Index kept = 0;
  for (std::size_t i = 1; i <= total; ++i) {
    s.iteration = i;
    Block b = Block::X;
    try {
      b = step(s, rng);
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "iteration " << i << ": " << e.what();
      throw NumericalError(os.str());
    }
    (void)b;
    if (i > config_.n_burnin && (i - config_.n_burnin) % config_.n_thin == 0) {
      rec.x_samples.row(kept) = s.x.transpose();
      rec.sigma2_samples[kept] = s.sigma2_obs;
      rec.tau2_samples[kept] = s.tau2;
      rec.nu_samples[kept] = s.nu;
      if (config_.record_w2) rec.w2_samples.row(kept) = s.w2.transpose();
      ++kept;
    }
  }

  rec.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  auto& e = rec.config_echo;
  e["sampler"] = "gibbs";
  e["n_samples"] = std::to_string(config_.n_samples);
  e["n_burnin"] = std::to_string(config_.n_burnin);
  e["n_thin"] = std::to_string(config_.n_thin);
  e["nu_warmup"] = std::to_string(config_.nu_warmup);
  e["seed"] = std::to_string(config_.seed);
  e["nu_prior"] = config_.nu_prior.describe();
  e["scale_hyper_a"] = to_text(config_.scale_hyper.a);
  e["scale_hyper_b"] = to_text(config_.scale_hyper.b);
  e["noise_hyper_a"] = to_text(config_.noise_hyper.a);
  e["noise_hyper_b"] = to_text(config_.noise_hyper.b);
  e["mu_location"] = to_text(config_.mu_location);
  e["x_sampler"] = config_.x_sampler == XSampler::Cholesky ? "cholesky" : "perturb-cg";
  e["cg_tol"] = to_text(config_.cg.tol);
  e["cg_max_iter"] = std::to_string(config_.cg.max_iter);
  e["rwm_initial_scale"] = to_text(config_.rwm.initial_scale);
  e["rwm_kappa"] = to_text(config_.rwm.kappa);
  e["rwm_target_accept"] = to_text(config_.rwm.target_accept);
  e["rwm_adaptation"] = "burn-in only";
  e["w2_floor"] = to_text(config_.w2_floor);
  e["init_x"] = "c A^T y, c = <y, A A^T y> / |A A^T y|^2";
  e["init_sigma2_obs"] = "(0.01 |y| / sqrt(m))^2";
  e["init_tau2"] = "1e-2";
  e["init_w2"] = "1";
  e["init_nu"] = "3";

  auto& st = rec.stats;
  st["rwm_final_scale"] = std::exp(s.rwm_log_scale);
  st["rwm_accept_rate"] = s.rwm_proposal_count
                              ? static_cast<double>(s.rwm_accept_count) /
                                    static_cast<double>(s.rwm_proposal_count)
                              : 0.0;
  st["rwm_proposals"] = static_cast<double>(s.rwm_proposal_count);
  st["w2_clamp_events"] = static_cast<double>(counters_.w2_clamp_events);
  st["degenerate_scale_events"] = static_cast<double>(counters_.degenerate_scale_events);
  st["cg_iterations"] = static_cast<double>(counters_.cg_iterations);
  st["x_updates"] = static_cast<double>(counters_.x_updates);
  for (int b = 0; b < kNumBlocks; ++b) {
    st[std::string("block_count_") + block_name(static_cast<Block>(b))] =
        static_cast<double>(counters_.block_counts[b]);
  }
  return rec;
}

ChainRecord run_gibbs(const LinearInverseProblem& problem, const DifferenceOperator& L,
                      const GibbsConfig& config) {
  GibbsSampler sampler(problem, L, config);
  return sampler.run();
}

}  // namespace stmrf
