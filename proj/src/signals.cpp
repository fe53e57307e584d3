#include "stmrf/signals.hpp"

#include <algorithm>
#include <cmath>

#include "stmrf/errors.hpp"

namespace stmrf {

Eigen::VectorXd PiecewiseConstantSignal::sample(int n) const {
  if (levels.size() != breakpoints.size() + 1) {
    throw ConfigError("piecewise-constant signal needs one more level than breakpoints");
  }
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end())) {
    throw ConfigError("piecewise-constant breakpoints must be sorted");
  }
  Eigen::VectorXd x(n);
  for (int j = 0; j < n; ++j) {
    const double t = (j + 0.5) / n;
    const auto k = std::upper_bound(breakpoints.begin(), breakpoints.end(), t) -
                   breakpoints.begin();
    x[j] = levels[static_cast<std::size_t>(k)];
  }
  return x;
}

Eigen::VectorXd GaussianBumpSignal::sample(int n) const {
  if (amplitudes.size() != centers.size() || centers.size() != widths.size()) {
    throw ConfigError("bump signal parameter lists differ in length");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    const double t = (j + 0.5) / n;
    for (std::size_t b = 0; b < centers.size(); ++b) {
      const double z = (t - centers[b]) / widths[b];
      x[j] += amplitudes[b] * std::exp(-0.5 * z * z);
    }
  }
  return x;
}

Eigen::VectorXd SquareDiskPhantom::sample(int n) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * n);
  for (int col = 0; col < n; ++col) {
    const double c = (col + 0.5) / n;
    for (int row = 0; row < n; ++row) {
      const double r = (row + 0.5) / n;
      double v = 0.0;
      if (r >= square_lo && r < square_hi && c >= square_lo && c < square_hi) {
        v = square_value;
      }
      const double dr = r - disk_center_row;
      const double dc = c - disk_center_col;
      if (dr * dr + dc * dc <= disk_radius * disk_radius) v = disk_value;
      x[row + static_cast<Eigen::Index>(n) * col] = v;
    }
  }
  return x;
}

}  // namespace stmrf
