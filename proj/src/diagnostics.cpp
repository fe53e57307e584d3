#include "stmrf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "stmrf/errors.hpp"

namespace stmrf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Lag-t autocovariance with divisor n.
double autocov(std::span<const double> x, double mean, std::size_t lag) {
  double s = 0.0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s / static_cast<double>(n);
}

double classic_r_hat(const std::vector<std::vector<double>>& chains) {
  const double m = static_cast<double>(chains.size());
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    const double s = sample_std(c);
    w += s * s;
  }
  w /= m;
  const double grand = mean_of(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / (m - 1.0);
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

// Replace every draw by the normal score of its pooled rank (average rank on ties).
std::vector<std::vector<double>> rank_normalize(const std::vector<std::vector<double>>& chains) {
  std::vector<std::pair<double, std::size_t>> all;
  std::size_t total = 0;
  for (const auto& c : chains) total += c.size();
  all.reserve(total);
  std::size_t idx = 0;
  for (const auto& c : chains) {
    for (double v : c) all.emplace_back(v, idx++);
  }
  std::sort(all.begin(), all.end());
  std::vector<double> ranks(total);
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    while (j + 1 < total && all[j + 1].first == all[i].first) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[all[t].second] = r;
    i = j + 1;
  }
  const boost::math::normal_distribution<double> std_normal;
  const double s = static_cast<double>(total);
  std::vector<std::vector<double>> out;
  idx = 0;
  for (const auto& c : chains) {
    std::vector<double> z(c.size());
    for (double& v : z) v = boost::math::quantile(std_normal, (ranks[idx++] - 0.375) / (s + 0.25));
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<std::vector<double>> split_chains(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

}  // namespace

EssResult effective_sample_size_detail(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 10) throw ConfigError("effective sample size needs at least 10 samples");
  const double nd = static_cast<double>(n);
  const double mean = mean_of(chain);
  const double g0 = autocov(chain, mean, 0);
  EssResult r;
  if (!(g0 > 0.0)) {
    r.ess = 1.0;
    r.iact = nd;
    r.degenerate = true;
    return r;
  }
  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair =
        (autocov(chain, mean, 2 * m) + autocov(chain, mean, 2 * m + 1)) / g0;
    if (pair < 0.0) break;
    tau += 2.0 * pair;
  }
  r.iact = tau;
  r.ess = std::clamp(nd / tau, 1.0, nd);
  return r;
}

double effective_sample_size(std::span<const double> chain) {
  return effective_sample_size_detail(chain).ess;
}

Eigen::VectorXd autocorrelation(std::span<const double> chain, int max_lag) {
  if (chain.size() < 2) throw ConfigError("autocorrelation needs at least two samples");
  if (max_lag < 0) throw ConfigError("maximum lag must be non-negative");
  const auto lags = std::min<std::size_t>(static_cast<std::size_t>(max_lag), chain.size() - 1);
  const double mean = mean_of(chain);
  const double g0 = autocov(chain, mean, 0);
  Eigen::VectorXd out(static_cast<Eigen::Index>(lags + 1));
  for (std::size_t t = 0; t <= lags; ++t) {
    out[static_cast<Eigen::Index>(t)] = g0 > 0.0 ? autocov(chain, mean, t) / g0 : (t == 0 ? 1.0 : 0.0);
  }
  return out;
}

std::vector<double> cumulative_mean(std::span<const double> chain) {
  std::vector<double> out(chain.size());
  double s = 0.0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    s += chain[i];
    out[i] = s / static_cast<double>(i + 1);
  }
  return out;
}

double split_r_hat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw ConfigError("R-hat needs at least two chains");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw ConfigError("R-hat chains must have equal length");
  }
  if (n < 4) throw ConfigError("R-hat needs at least four draws per chain");
  const auto split = split_chains(chains);
  const double bulk = classic_r_hat(rank_normalize(split));

  std::vector<double> pooled;
  for (const auto& c : split) pooled.insert(pooled.end(), c.begin(), c.end());
  const double med = median_of(pooled);
  auto folded = split;
  for (auto& c : folded) {
    for (double& v : c) v = std::abs(v - med);
  }
  const double tail = classic_r_hat(rank_normalize(folded));
  return std::max(bulk, tail);
}

Interval hdi(std::span<const double> samples, double level) {
  const std::size_t n = samples.size();
  if (n < 20) throw ConfigError("HDI needs at least 20 samples");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("HDI level must lie in (0, 1)");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  auto gap = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n) - 1e-9));
  gap = std::min(gap, n - 1);
  std::size_t best = 0;
  double width = s[gap] - s[0];
  for (std::size_t i = 1; i + gap < n; ++i) {
    const double w = s[i + gap] - s[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {s[best], s[best + gap]};
}

double relative_error(const Eigen::VectorXd& x_bar, const Eigen::VectorXd& x_true) {
  if (x_bar.size() != x_true.size()) throw ConfigError("relative error: dimension mismatch");
  const double denom = x_true.norm();
  if (!(denom > 0.0)) throw ConfigError("relative error: reference has zero norm");
  return (x_bar - x_true).norm() / denom;
}

ScalarSummary summarize_scalar(const std::vector<std::vector<double>>& chains, double level) {
  if (chains.empty()) throw ConfigError("no chains to summarize");
  std::vector<double> pooled;
  ScalarSummary out;
  out.n_eff = 0.0;
  for (const auto& c : chains) {
    pooled.insert(pooled.end(), c.begin(), c.end());
    out.n_eff += c.size() >= 10 ? effective_sample_size(c) : static_cast<double>(c.size());
  }
  if (pooled.empty()) throw ConfigError("no samples to summarize");
  out.mean = mean_of(pooled);
  out.std = sample_std(pooled);
  out.median = median_of(pooled);
  if (pooled.size() >= 20) {
    const Interval iv = hdi(pooled, level);
    out.hdi_lo = iv.lo;
    out.hdi_hi = iv.hi;
  } else {
    out.hdi_lo = *std::min_element(pooled.begin(), pooled.end());
    out.hdi_hi = *std::max_element(pooled.begin(), pooled.end());
  }
  out.r_hat = chains.size() >= 2 && chains.front().size() >= 4 ? split_r_hat(chains) : kNaN;
  return out;
}

std::map<std::string, std::vector<double>> scalar_traces(const ChainRecord& chain) {
  std::map<std::string, std::vector<double>> out;
  if (chain.nu_samples.size() > 0) {
    out["nu"].assign(chain.nu_samples.begin(), chain.nu_samples.end());
  }
  if (chain.tau2_samples.size() > 0) {
    auto& t = out["tau"];
    for (double v : chain.tau2_samples) t.push_back(std::sqrt(v));
  }
  if (chain.sigma2_samples.size() > 0) {
    auto& s = out["sigma_obs"];
    for (double v : chain.sigma2_samples) s.push_back(std::sqrt(v));
  }
  return out;
}

PosteriorSummary summarize(const std::vector<ChainRecord>& chains, const Eigen::VectorXd* x_true,
                           double level) {
  if (chains.empty()) throw ConfigError("no chains to summarize");
  const Eigen::Index n = chains.front().n_samples();
  const Eigen::Index d = chains.front().dim();
  for (const auto& c : chains) {
    if (c.n_samples() != n || c.dim() != d) {
      throw ConfigError("chains differ in length or dimension");
    }
  }
  if (n < 1) throw ConfigError("chains hold no samples");

  PosteriorSummary s;
  s.n_chains = chains.size();
  s.n_samples_per_chain = static_cast<std::size_t>(n);
  s.mean.resize(d);
  s.median.resize(d);
  s.std.resize(d);
  s.hdi_lo.resize(d);
  s.hdi_hi.resize(d);
  s.n_eff.resize(d);
  s.r_hat.resize(d);

  std::vector<std::vector<double>> per_chain(chains.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    for (std::size_t c = 0; c < chains.size(); ++c) {
      const auto col = chains[c].x_samples.col(j);
      per_chain[c].assign(col.begin(), col.end());
    }
    const ScalarSummary ss = summarize_scalar(per_chain, level);
    s.mean[j] = ss.mean;
    s.median[j] = ss.median;
    s.std[j] = ss.std;
    s.hdi_lo[j] = ss.hdi_lo;
    s.hdi_hi[j] = ss.hdi_hi;
    s.n_eff[j] = ss.n_eff;
    s.r_hat[j] = ss.r_hat;
  }

  std::map<std::string, std::vector<std::vector<double>>> blocks;
  for (const auto& c : chains) {
    for (auto& [name, trace] : scalar_traces(c)) blocks[name].push_back(std::move(trace));
  }
  for (auto& [name, traces] : blocks) {
    if (traces.size() != chains.size()) continue;
    s.scalar_blocks[name] = summarize_scalar(traces, level);
  }

  s.eps_rel = x_true ? relative_error(s.mean, *x_true) : kNaN;
  if (chains.size() >= 2 && n >= 4) {
    s.r_hat_max["x"] = s.r_hat.maxCoeff();
    for (const auto& [name, ss] : s.scalar_blocks) s.r_hat_max[name] = ss.r_hat;
  }
  return s;
}

}  // namespace stmrf
