#pragma once

#include <vector>

#include <Eigen/Core>

namespace stmrf {

/// Piecewise-constant signal on [0, 1]: value levels[k] on
/// [breakpoints[k-1], breakpoints[k]), with levels.size() == breakpoints.size() + 1.
struct PiecewiseConstantSignal {
  std::vector<double> breakpoints{0.2, 0.4, 0.6, 0.8};
  std::vector<double> levels{0.0, 1.0, 0.5, 1.0, 0.0};

  Eigen::VectorXd sample(int n) const;
};

/// Sum of Gaussian bumps on [0, 1]; the default has its tallest peak at 0.8.
struct GaussianBumpSignal {
  std::vector<double> amplitudes{0.5, 0.35, 1.0};
  std::vector<double> centers{0.25, 0.5, 0.8};
  std::vector<double> widths{0.07, 0.05, 0.04};

  Eigen::VectorXd sample(int n) const;
};

/// Axis-aligned square with a disk drawn on top, zero background, in
/// unit-square coordinates.
struct SquareDiskPhantom {
  double square_lo = 0.2;
  double square_hi = 0.8;
  double square_value = 0.5;
  double disk_center_row = 0.5;
  double disk_center_col = 0.5;
  double disk_radius = 0.2;
  double disk_value = 1.0;

  /// Column-major N x N image as a vector of length N^2.
  Eigen::VectorXd sample(int n) const;
};

}  // namespace stmrf
