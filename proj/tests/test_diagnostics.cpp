#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "stmrf/diagnostics.hpp"
#include "stmrf/errors.hpp"
#include "stmrf/random.hpp"

using namespace stmrf;

namespace {

std::vector<double> ar1(double phi, std::size_t n, std::uint64_t seed, double shift = 0.0) {
  Rng rng(seed);
  std::vector<double> out(n);
  double v = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (auto& o : out) {
    v = phi * v + rng.normal();
    o = v + shift;
  }
  return out;
}

}  // namespace

TEST_CASE("ESS of an AR(1) chain matches (1 - phi) / (1 + phi)") {
  for (double phi : {0.0, 0.5, 0.9}) {
    const std::size_t n = 200000;
    const auto c = ar1(phi, n, 1 + static_cast<std::uint64_t>(phi * 10));
    const EssResult r = effective_sample_size_detail(c);
    const double expected_iact = (1.0 + phi) / (1.0 - phi);
    CHECK(r.iact == doctest::Approx(expected_iact).epsilon(0.1));
    CHECK(!r.degenerate);
    CHECK(r.ess <= static_cast<double>(n));
  }
}

TEST_CASE("ESS of a constant chain is flagged") {
  const std::vector<double> c(50, 2.5);
  const EssResult r = effective_sample_size_detail(c);
  CHECK(r.degenerate);
  CHECK(r.ess == 1.0);
  CHECK_THROWS_AS(effective_sample_size(std::vector<double>(5, 1.0)), ConfigError);
}

TEST_CASE("autocorrelation of an AR(1) chain decays geometrically") {
  const auto c = ar1(0.7, 100000, 3);
  const Eigen::VectorXd rho = autocorrelation(c, 3);
  CHECK(rho[0] == doctest::Approx(1.0));
  for (int k = 1; k <= 3; ++k) CHECK(std::abs(rho[k] - std::pow(0.7, k)) < 0.02);
}

TEST_CASE("cumulative mean") {
  const std::vector<double> c{1, 2, 3, 6};
  const auto m = cumulative_mean(c);
  CHECK(m == std::vector<double>{1, 1.5, 2, 3});
}

TEST_CASE("split R-hat separates mixed from unmixed chains") {
  std::vector<std::vector<double>> good, bad;
  for (std::uint64_t c = 0; c < 4; ++c) {
    good.push_back(ar1(0.3, 2000, 10 + c));
    bad.push_back(ar1(0.3, 2000, 10 + c, c == 0 ? 2.0 : 0.0));
  }
  const double rg = split_r_hat(good);
  CHECK(rg < 1.01);
  CHECK(rg > 0.99);
  CHECK(split_r_hat(bad) > 1.1);

  // A drifting single trend is caught by splitting.
  std::vector<std::vector<double>> trend(2);
  for (int i = 0; i < 1000; ++i) {
    trend[0].push_back(i * 0.01);
    trend[1].push_back(i * 0.01 + 0.001);
  }
  CHECK(split_r_hat(trend) > 1.5);

  // Rank normalization makes it invariant to affine maps, including flips.
  auto mapped = good;
  for (auto& c : mapped)
    for (auto& v : c) v = -3.0 * v + 7.0;
  CHECK(split_r_hat(mapped) == doctest::Approx(rg).epsilon(1e-12));
  // Still detected after a nonlinear monotone map.
  auto expd = bad;
  for (auto& c : expd)
    for (auto& v : c) v = std::exp(v);
  CHECK(split_r_hat(expd) > 1.1);

  CHECK_THROWS_AS(split_r_hat({good[0]}), ConfigError);
  CHECK_THROWS_AS(split_r_hat({good[0], std::vector<double>(10, 0.0)}), ConfigError);
}

TEST_CASE("HDI: shortest interval with lowest-start ties") {
  std::vector<double> s(100);
  std::iota(s.begin(), s.end(), 1.0);
  const Interval a = hdi(s, 0.9);
  CHECK(a.lo == 1.0);
  CHECK(a.hi == 91.0);

  // Skewed sample: the interval hugs the mode at zero.
  Rng rng(5);
  std::vector<double> e(20000);
  for (auto& v : e) v = -std::log(rng.uniform());
  const Interval b = hdi(e, 0.95);
  CHECK(b.lo < 0.01);
  CHECK(b.hi == doctest::Approx(-std::log(0.05)).epsilon(0.05));

  // Brute force over all windows on a small sample.
  std::vector<double> u(37);
  for (auto& v : u) v = rng.normal();
  const Interval c = hdi(u, 0.8);
  auto sorted = u;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t g = static_cast<std::size_t>(std::ceil(0.8 * 37));
  double best = 1e300;
  for (std::size_t i = 0; i + g < sorted.size(); ++i) best = std::min(best, sorted[i + g] - sorted[i]);
  CHECK(c.hi - c.lo == best);
  CHECK_THROWS_AS(hdi(std::vector<double>(5, 0.0)), ConfigError);
  CHECK_THROWS_AS(hdi(s, 1.0), ConfigError);
}

TEST_CASE("relative error") {
  CHECK(relative_error(Eigen::Vector2d(3, 4), Eigen::Vector2d(3, 0)) ==
        doctest::Approx(4.0 / 3.0));
  CHECK_THROWS_AS(relative_error(Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0)), ConfigError);
}

TEST_CASE("summaries pool chains and derive scalar blocks") {
  std::vector<ChainRecord> chains(2);
  for (std::size_t c = 0; c < 2; ++c) {
    auto& r = chains[c];
    const std::size_t n = 400;
    r.x_samples.resize(n, 3);
    r.sigma2_samples.resize(n);
    r.tau2_samples.resize(n);
    r.nu_samples.resize(n);
    const auto a = ar1(0.2, n, 20 + c), b = ar1(0.2, n, 30 + c);
    for (std::size_t i = 0; i < n; ++i) {
      r.x_samples.row(i) << 1.0 + a[i], -2.0 + b[i], 5.0;
      r.sigma2_samples[i] = 0.04;
      r.tau2_samples[i] = 4.0 + 0.1 * a[i];
      r.nu_samples[i] = 3.0 + 0.1 * b[i];
    }
  }
  const Eigen::VectorXd truth = Eigen::Vector3d(1.0, -2.0, 5.0);
  const PosteriorSummary s = summarize(chains, &truth);
  CHECK(s.n_chains == 2);
  CHECK(s.n_samples_per_chain == 400);
  Eigen::MatrixXd pooled(800, 3);
  pooled << chains[0].x_samples, chains[1].x_samples;
  CHECK((s.mean - pooled.colwise().mean().transpose()).norm() < 1e-12);
  CHECK(s.eps_rel == doctest::Approx(relative_error(s.mean, truth)));
  CHECK(s.scalar_blocks.at("sigma_obs").mean == doctest::Approx(0.2));
  CHECK(s.scalar_blocks.at("tau").mean == doctest::Approx(2.0).epsilon(0.01));
  CHECK(s.scalar_blocks.count("nu") == 1);
  CHECK(s.r_hat_max.at("x") < 1.05);
  CHECK(s.std[2] == 0.0);
  const auto traces = scalar_traces(chains[0]);
  CHECK(traces.at("sigma_obs")[0] == doctest::Approx(0.2));
  CHECK(std::isnan(summarize({chains[0]}).eps_rel));
}
