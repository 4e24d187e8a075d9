#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace flexnet {

/// Geometric decay ratio (rho / x)^x shared by all occupancy lower bounds.
/// Throws DomainError unless rho > 0 and x > 0.
double decay_ratio(double rho, double x);
/// x * (ln rho - ln x).
double log_decay_ratio(double rho, double x);

/// Smallest integer level i with i >= 1 / rho0. When 1 / rho0 is within
/// 1e-12 (relative) of an integer, that integer is used.
int validity_threshold(double rho0);

/// Bound value at one level. `value` may underflow to zero; `log_value` is
/// always finite.
struct BoundPoint {
  double value = 0.0;
  double log_value = 0.0;
  bool valid = false;
};

/// Simple process (one dispatcher, s identical servers, load rho < s):
/// E[q(i)] >= r(rho, s)^i / s for every i >= 0. Throws DomainError when
/// rho >= s.
BoundPoint simple_bound(double rho, int servers, int i);

/// r(rho0, alpha)^i / alpha. Valid when i >= 1 / rho0 and alpha >= rho0.
BoundPoint alpha_bound(double rho0, double alpha, int i);

/// Same formula with a weighted degree average theta_g >= alpha in place of
/// alpha.
BoundPoint theta_bound(double rho0, double theta_g, int i);

/// rho0 / (beta (beta + 1) + rho0) * r(rho0, beta + 1)^i / (beta + 1).
/// Valid when i >= 1 / rho0 and beta + 1 >= rho0.
BoundPoint beta_bound(double rho0, double beta, int i);

/// Pointwise maximum of alpha_bound and beta_bound.
BoundPoint combined_bound(double rho0, double alpha, double beta, int i);

enum class BoundKind { Simple, Alpha, Theta, Beta, Combined };

std::string to_string(BoundKind kind);

/// A bound evaluated over levels 0..values.size()-1.
struct BoundCurve {
  BoundKind kind = BoundKind::Alpha;
  double rho0 = 0.0;
  /// |S| for Simple, alpha, theta_g or beta; alpha for Combined.
  double parameter = 0.0;
  /// beta for Combined, unused otherwise.
  double parameter2 = 0.0;
  std::vector<double> values;
  std::vector<double> log_values;
  /// First level at which the bound is asserted (0 for Simple).
  int valid_from = 0;
  /// False when the parameter precondition (parameter >= rho0, or
  /// beta + 1 >= rho0) fails; values are then informational only.
  bool parameter_admissible = true;
};

BoundCurve make_bound_curve(BoundKind kind, double rho0, double parameter, int i_max,
                            double parameter2 = 0.0);

/// Grid check that f(x) = r(rho, x)^k / x is strictly decreasing and
/// strictly convex on [rho, x_max].
struct ConvexityScan {
  bool decreasing = false;
  bool convex = false;
  /// min_j (f_j - f_{j+1}) / f_j
  double worst_decrease = 0.0;
  /// min_j (f_{j-1} - 2 f_j + f_{j+1}) / f_j
  double worst_convexity = 0.0;
  std::size_t points = 0;
};

/// Requires k >= 1 / rho, x_max > rho and points >= 3; DomainError otherwise.
ConvexityScan scan_decay_profile(double rho, int k, double x_max, std::size_t points);

}  // namespace flexnet
