#include "stmrf/nuts.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "stmrf/errors.hpp"

namespace stmrf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

std::string to_text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double logp = -kInf;
};

class DualAveraging {
 public:
  explicit DualAveraging(const NutsConfig& c) : c_(c) {}

  void restart(double step_size) {
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
    mu_ = std::log(10.0 * step_size);
  }

  double learn(double accept_stat) {
    ++counter_;
    accept_stat = std::min(1.0, accept_stat);
    const double n = static_cast<double>(counter_);
    const double eta = 1.0 / (n + c_.t0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (c_.target_accept - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(n) / c_.gamma;
    const double x_eta = std::pow(n, -c_.kappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  double final_step_size() const { return std::exp(x_bar_); }

 private:
  const NutsConfig& c_;
  std::size_t counter_ = 0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  double mu_ = 0.0;
};

// Welford accumulator and the warm-up window schedule for the diagonal metric.
class MetricAdaptation {
 public:
  MetricAdaptation(const NutsConfig& c, Eigen::Index dim)
      : n_warmup_(c.n_warmup),
        init_buffer_(c.init_buffer),
        term_buffer_(c.term_buffer),
        base_window_(c.base_window),
        mean_(Eigen::VectorXd::Zero(dim)),
        m2_(Eigen::VectorXd::Zero(dim)) {
    if (n_warmup_ < 20) {
      enabled_ = false;
      return;
    }
    if (init_buffer_ + base_window_ + term_buffer_ > n_warmup_) {
      init_buffer_ = static_cast<std::size_t>(0.15 * static_cast<double>(n_warmup_));
      term_buffer_ = static_cast<std::size_t>(0.1 * static_cast<double>(n_warmup_));
      base_window_ = n_warmup_ - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_window_ = init_buffer_ + window_size_ - 1;
  }

  // Returns true when a window closed and inv_metric was updated.
  bool learn(Eigen::VectorXd& inv_metric, const Eigen::VectorXd& q) {
    if (!enabled_) return false;
    if (in_window()) add(q);
    if (end_of_window()) {
      compute_next_window();
      const double n = static_cast<double>(count_);
      Eigen::VectorXd var = m2_ / (n - 1.0);
      inv_metric = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
      count_ = 0;
      mean_.setZero();
      m2_.setZero();
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

 private:
  bool in_window() const {
    return counter_ >= init_buffer_ && counter_ < n_warmup_ - term_buffer_ &&
           counter_ != n_warmup_;
  }
  bool end_of_window() const { return counter_ == next_window_ && counter_ != n_warmup_; }

  void compute_next_window() {
    if (next_window_ == n_warmup_ - term_buffer_ - 1) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != n_warmup_ - term_buffer_ - 1) {
      const std::size_t boundary = next_window_ + 2 * window_size_;
      if (boundary >= n_warmup_ - term_buffer_) next_window_ = n_warmup_ - term_buffer_ - 1;
    }
  }

  void add(const Eigen::VectorXd& q) {
    ++count_;
    const Eigen::VectorXd delta = q - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(q - mean_);
  }

  bool enabled_ = true;
  std::size_t n_warmup_;
  std::size_t init_buffer_;
  std::size_t term_buffer_;
  std::size_t base_window_;
  std::size_t window_size_ = 0;
  std::size_t next_window_ = 0;
  std::size_t counter_ = 0;
  std::size_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

class Nuts {
 public:
  Nuts(const LogDensityFn& f, const NutsConfig& c, Rng& rng, Eigen::Index dim)
      : f_(f), c_(c), rng_(rng), inv_metric_(Eigen::VectorXd::Ones(dim)) {}

  void evaluate(PhasePoint& z) {
    try {
      z.logp = f_(z.q, z.grad);
      if (!std::isfinite(z.logp)) z.logp = -kInf;
    } catch (const NumericalError&) {
      z.logp = -kInf;
    }
    if (z.logp == -kInf || z.grad.size() != z.q.size()) z.grad = Eigen::VectorXd::Zero(z.q.size());
  }

  double hamiltonian(const PhasePoint& z) const {
    const double h = -z.logp + 0.5 * z.p.dot(inv_metric_.cwiseProduct(z.p));
    return std::isnan(h) ? kInf : h;
  }

  Eigen::VectorXd dtau_dp(const PhasePoint& z) const { return inv_metric_.cwiseProduct(z.p); }

  void sample_momentum(PhasePoint& z) {
    z.p.resize(z.q.size());
    for (Eigen::Index i = 0; i < z.p.size(); ++i) {
      z.p[i] = rng_.normal() / std::sqrt(inv_metric_[i]);
    }
  }

  void leapfrog(PhasePoint& z, double eps) {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    evaluate(z);
    z.p += 0.5 * eps * z.grad;
  }

  // Doubling/halving search for a step size with a one-step acceptance
  // near 0.8, as in common NUTS implementations.
  void init_step_size(const PhasePoint& z0) {
    PhasePoint z = z0;
    sample_momentum(z);
    double h0 = hamiltonian(z);
    leapfrog(z, eps_);
    double delta_h = h0 - hamiltonian(z);
    const int direction = delta_h > std::log(0.8) ? 1 : -1;
    for (int iter = 0; iter < 200; ++iter) {
      z = z0;
      sample_momentum(z);
      h0 = hamiltonian(z);
      leapfrog(z, eps_);
      delta_h = h0 - hamiltonian(z);
      if (direction == 1 && !(delta_h > std::log(0.8))) break;
      if (direction == -1 && !(delta_h < std::log(0.8))) break;
      eps_ = direction == 1 ? 2.0 * eps_ : 0.5 * eps_;
      if (eps_ > 1e7) throw NumericalError("step size search diverged; posterior may be improper");
      if (eps_ == 0.0) throw NumericalError("step size search collapsed to zero");
    }
  }

  static bool criterion(const Eigen::VectorXd& p_sharp_minus, const Eigen::VectorXd& p_sharp_plus,
                        const Eigen::VectorXd& rho) {
    return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
  }

  bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, Eigen::VectorXd& p_sharp_beg,
                  Eigen::VectorXd& p_sharp_end, Eigen::VectorXd& rho, Eigen::VectorXd& p_beg,
                  Eigen::VectorXd& p_end, double h0, double sign, std::size_t& n_leapfrog,
                  double& log_sum_weight, double& sum_metro_prob) {
    if (depth == 0) {
      leapfrog(z, sign * eps_);
      ++n_leapfrog;
      const double h = hamiltonian(z);
      if (h - h0 > c_.max_delta_h) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro_prob += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
      z_propose = z;
      p_sharp_beg = dtau_dp(z);
      p_sharp_end = p_sharp_beg;
      rho += z.p;
      p_beg = z.p;
      p_end = p_beg;
      return !divergent_;
    }

    const Eigen::Index n = z.q.size();
    double log_sum_weight_init = -kInf;
    Eigen::VectorXd p_init_end(n), p_sharp_init_end(n);
    Eigen::VectorXd rho_init = Eigen::VectorXd::Zero(n);
    if (!build_tree(depth - 1, z, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                    p_init_end, h0, sign, n_leapfrog, log_sum_weight_init, sum_metro_prob)) {
      return false;
    }

    PhasePoint z_propose_final = z;
    double log_sum_weight_final = -kInf;
    Eigen::VectorXd p_final_beg(n), p_sharp_final_beg(n);
    Eigen::VectorXd rho_final = Eigen::VectorXd::Zero(n);
    if (!build_tree(depth - 1, z, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                    p_final_beg, p_end, h0, sign, n_leapfrog, log_sum_weight_final,
                    sum_metro_prob)) {
      return false;
    }

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (rng_.uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = criterion(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && criterion(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
    persist = persist && criterion(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
    return persist;
  }

  struct Transition {
    double accept_stat = 0.0;
    int depth = 0;
    std::size_t n_leapfrog = 0;
    bool divergent = false;
  };

  Transition transition(PhasePoint& z0) {
    sample_momentum(z0);
    const Eigen::Index n = z0.q.size();
    PhasePoint z_fwd = z0, z_bck = z0, z_sample = z0, z_propose = z0;
    Eigen::VectorXd p_fwd_fwd = z0.p, p_sharp_fwd_fwd = dtau_dp(z0);
    Eigen::VectorXd p_fwd_bck = z0.p, p_sharp_fwd_bck = p_sharp_fwd_fwd;
    Eigen::VectorXd p_bck_fwd = z0.p, p_sharp_bck_fwd = p_sharp_fwd_fwd;
    Eigen::VectorXd p_bck_bck = z0.p, p_sharp_bck_bck = p_sharp_fwd_fwd;
    Eigen::VectorXd rho = z0.p;
    double log_sum_weight = 0.0;
    const double h0 = hamiltonian(z0);
    std::size_t n_leapfrog = 0;
    double sum_metro_prob = 0.0;
    int depth = 0;
    divergent_ = false;

    while (depth < c_.max_depth) {
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(n), rho_bck = Eigen::VectorXd::Zero(n);
      bool valid = false;
      double log_sum_weight_subtree = -kInf;
      if (rng_.uniform() > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid = build_tree(depth, z_fwd, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd,
                           p_fwd_bck, p_fwd_fwd, h0, 1.0, n_leapfrog, log_sum_weight_subtree,
                           sum_metro_prob);
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid = build_tree(depth, z_bck, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck,
                           p_bck_fwd, p_bck_bck, h0, -1.0, n_leapfrog, log_sum_weight_subtree,
                           sum_metro_prob);
      }
      if (!valid) break;
      ++depth;
      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (rng_.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
      rho = rho_bck + rho_fwd;
      bool persist = criterion(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && criterion(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && criterion(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }

    Transition t;
    t.depth = depth;
    t.n_leapfrog = n_leapfrog;
    t.divergent = divergent_;
    t.accept_stat = n_leapfrog ? sum_metro_prob / static_cast<double>(n_leapfrog) : 0.0;
    z0 = z_sample;
    return t;
  }

  double step_size() const { return eps_; }
  void set_step_size(double e) { eps_ = e; }
  Eigen::VectorXd& inv_metric() { return inv_metric_; }

 private:
  const LogDensityFn& f_;
  const NutsConfig& c_;
  Rng& rng_;
  Eigen::VectorXd inv_metric_;
  double eps_ = 0.1;
  bool divergent_ = false;
};

}  // namespace

NutsResult sample_nuts(const LogDensityFn& log_density, Eigen::VectorXd theta0,
                       const NutsConfig& config, Rng& rng) {
  if (config.max_depth < 1 || !(config.target_accept > 0.0 && config.target_accept < 1.0) ||
      !(config.initial_step_size > 0.0)) {
    throw ConfigError("invalid NUTS settings");
  }
  const Eigen::Index dim = theta0.size();
  Nuts nuts(log_density, config, rng, dim);
  PhasePoint z;
  z.q = std::move(theta0);
  nuts.evaluate(z);
  if (z.logp == -kInf) throw NumericalError("initial point has zero posterior density");

  nuts.set_step_size(config.initial_step_size);
  nuts.init_step_size(z);
  DualAveraging da(config);
  da.restart(nuts.step_size());
  MetricAdaptation metric(config, dim);

  NutsResult result;
  result.draws.resize(static_cast<Eigen::Index>(config.n_samples), dim);
  double depth_sum = 0.0, accept_sum = 0.0;

  const std::size_t total = config.n_warmup + config.n_samples;
  for (std::size_t i = 0; i < total; ++i) {
    const bool warmup = i < config.n_warmup;
    const auto t = nuts.transition(z);
    result.stats.leapfrog_steps += t.n_leapfrog;
    if (warmup) {
      nuts.set_step_size(da.learn(t.accept_stat));
      if (config.adapt_metric && metric.learn(nuts.inv_metric(), z.q)) {
        nuts.init_step_size(z);
        da.restart(nuts.step_size());
      }
      if (i + 1 == config.n_warmup) nuts.set_step_size(da.final_step_size());
    } else {
      if (t.divergent) ++result.stats.divergences;
      depth_sum += t.depth;
      accept_sum += t.accept_stat;
      result.draws.row(static_cast<Eigen::Index>(i - config.n_warmup)) = z.q.transpose();
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(config.n_samples, 1));
  result.stats.step_size = nuts.step_size();
  result.stats.mean_tree_depth = depth_sum / n;
  result.stats.mean_accept_stat = accept_sum / n;
  result.stats.flagged =
      static_cast<double>(result.stats.divergences) > config.divergence_flag_fraction * n;
  result.inv_metric = nuts.inv_metric();
  return result;
}

ChainRecord run_nuts(const TargetPosterior& target, const NutsConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  const LogDensityFn f = [&target](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    return target.log_density(theta, grad);
  };
  const NutsResult res = sample_nuts(f, target.initial_point(), config, rng);

  const auto n_s = res.draws.rows();
  ChainRecord rec;
  rec.sampler = "nuts";
  rec.prior = prior_kind_name(target.kind());
  rec.seed = config.seed;
  rec.x_samples.resize(n_s, target.x_dim());
  rec.sigma2_samples.resize(n_s);
  rec.tau2_samples.resize(n_s);
  if (target.kind() == PriorKind::StudentT) rec.nu_samples.resize(n_s);
  for (Eigen::Index j = 0; j < n_s; ++j) {
    const ConstrainedPoint p = target.to_constrained(res.draws.row(j).transpose());
    rec.x_samples.row(j) = p.x.transpose();
    rec.sigma2_samples[j] = p.sigma2_obs;
    rec.tau2_samples[j] = p.tau2;
    if (target.kind() == PriorKind::StudentT) rec.nu_samples[j] = p.nu;
  }
  rec.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  auto& e = rec.config_echo;
  e["sampler"] = "nuts";
  e["prior"] = rec.prior;
  e["n_samples"] = std::to_string(config.n_samples);
  e["n_burnin"] = std::to_string(config.n_warmup);
  e["seed"] = std::to_string(config.seed);
  e["max_tree_depth"] = std::to_string(config.max_depth);
  e["target_accept"] = to_text(config.target_accept);
  e["dual_averaging_gamma"] = to_text(config.gamma);
  e["dual_averaging_t0"] = to_text(config.t0);
  e["dual_averaging_kappa"] = to_text(config.kappa);
  e["metric"] = config.adapt_metric ? "diagonal (windowed)" : "unit";
  e["metric_windows"] = std::to_string(config.init_buffer) + "/" +
                        std::to_string(config.base_window) + "/" +
                        std::to_string(config.term_buffer);
  e["max_delta_h"] = to_text(config.max_delta_h);
  e["scale_hyper_a"] = to_text(target.scale_hyper().a);
  e["scale_hyper_b"] = to_text(target.scale_hyper().b);
  e["noise_hyper_a"] = to_text(target.noise_hyper().a);
  e["noise_hyper_b"] = to_text(target.noise_hyper().b);
  e["mu_location"] = to_text(target.mu_location());
  if (target.kind() == PriorKind::StudentT) e["nu_prior"] = target.nu_prior().describe();
  if (target.kind() == PriorKind::Laplace) e["laplace_eps"] = to_text(target.laplace_eps());

  auto& st = rec.stats;
  st["step_size"] = res.stats.step_size;
  st["divergences"] = static_cast<double>(res.stats.divergences);
  st["mean_tree_depth"] = res.stats.mean_tree_depth;
  st["mean_accept_stat"] = res.stats.mean_accept_stat;
  st["leapfrog_steps"] = static_cast<double>(res.stats.leapfrog_steps);
  st["divergence_flag"] = res.stats.flagged ? 1.0 : 0.0;
  return rec;
}

ChainRecord run_nuts(const TargetPosterior& target, std::size_t n_samples, std::size_t n_warmup,
                     std::uint64_t seed) {
  NutsConfig c;
  c.n_samples = n_samples;
  c.n_warmup = n_warmup;
  c.seed = seed;
  return run_nuts(target, c);
}

}  // namespace stmrf
