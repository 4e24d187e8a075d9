#include "flexnet/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flexnet/errors.hpp"

namespace flexnet {

namespace {

void require_positive(double rho, double x) {
  if (!(rho > 0.0) || !(x > 0.0) || !std::isfinite(rho) || !std::isfinite(x)) {
    throw DomainError("decay ratio needs rho > 0 and x > 0");
  }
}

// [r(rho0, x)]^i / x scaled by `prefactor`, evaluated in log space.
BoundPoint geometric_point(double rho0, double x, int i, double log_prefactor, bool admissible) {
  BoundPoint p;
  p.log_value = log_prefactor + i * log_decay_ratio(rho0, x) - std::log(x);
  p.value = std::exp(p.log_value);
  p.valid = admissible && i >= validity_threshold(rho0);
  return p;
}

}  // namespace

double log_decay_ratio(double rho, double x) {
  require_positive(rho, x);
  return x * (std::log(rho) - std::log(x));
}

double decay_ratio(double rho, double x) { return std::exp(log_decay_ratio(rho, x)); }

int validity_threshold(double rho0) {
  if (!(rho0 > 0.0)) throw DomainError("rho0 must be positive");
  const double t = 1.0 / rho0;
  const double nearest = std::round(t);
  if (std::abs(t - nearest) <= 1e-12 * std::max(1.0, t)) return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(t));
}

BoundPoint simple_bound(double rho, int servers, int i) {
  if (servers < 1) throw DomainError("simple bound needs at least one server");
  if (!(rho < servers)) throw DomainError("simple process with rho >= |S| is not ergodic");
  if (i < 0) throw DomainError("level must be nonnegative");
  const double s = servers;
  BoundPoint p;
  p.log_value = i * log_decay_ratio(rho, s) - std::log(s);
  p.value = std::exp(p.log_value);
  p.valid = true;
  return p;
}

BoundPoint alpha_bound(double rho0, double alpha, int i) {
  return geometric_point(rho0, alpha, i, 0.0, alpha >= rho0);
}

BoundPoint theta_bound(double rho0, double theta_g, int i) {
  return geometric_point(rho0, theta_g, i, 0.0, theta_g >= rho0);
}

BoundPoint beta_bound(double rho0, double beta, int i) {
  const double log_pre = std::log(rho0) - std::log(beta * (beta + 1.0) + rho0);
  return geometric_point(rho0, beta + 1.0, i, log_pre, beta + 1.0 >= rho0);
}

BoundPoint combined_bound(double rho0, double alpha, double beta, int i) {
  const BoundPoint a = alpha_bound(rho0, alpha, i);
  const BoundPoint b = beta_bound(rho0, beta, i);
  BoundPoint p = a.log_value >= b.log_value ? a : b;
  p.valid = a.valid && b.valid;
  return p;
}

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::Simple: return "simple";
    case BoundKind::Alpha: return "alpha";
    case BoundKind::Theta: return "theta";
    case BoundKind::Beta: return "beta";
    case BoundKind::Combined: return "combined";
  }
  return "?";
}

BoundCurve make_bound_curve(BoundKind kind, double rho0, double parameter, int i_max,
                            double parameter2) {
  if (i_max < 0) throw DomainError("i_max must be nonnegative");
  BoundCurve c;
  c.kind = kind;
  c.rho0 = rho0;
  c.parameter = parameter;
  c.parameter2 = parameter2;
  c.valid_from = kind == BoundKind::Simple ? 0 : validity_threshold(rho0);
  switch (kind) {
    case BoundKind::Simple: c.parameter_admissible = rho0 < parameter; break;
    case BoundKind::Alpha:
    case BoundKind::Theta: c.parameter_admissible = parameter >= rho0; break;
    case BoundKind::Beta: c.parameter_admissible = parameter + 1.0 >= rho0; break;
    case BoundKind::Combined:
      c.parameter_admissible = parameter >= rho0 && parameter2 + 1.0 >= rho0;
      break;
  }
  for (int i = 0; i <= i_max; ++i) {
    BoundPoint p;
    switch (kind) {
      case BoundKind::Simple:
        p = simple_bound(rho0, static_cast<int>(std::lround(parameter)), i);
        break;
      case BoundKind::Alpha: p = alpha_bound(rho0, parameter, i); break;
      case BoundKind::Theta: p = theta_bound(rho0, parameter, i); break;
      case BoundKind::Beta: p = beta_bound(rho0, parameter, i); break;
      case BoundKind::Combined: p = combined_bound(rho0, parameter, parameter2, i); break;
    }
    c.values.push_back(p.value);
    c.log_values.push_back(p.log_value);
  }
  return c;
}

ConvexityScan scan_decay_profile(double rho, int k, double x_max, std::size_t points) {
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  if (k * rho < 1.0 - 1e-12) throw DomainError("k must satisfy k >= 1 / rho");
  if (!(x_max > rho)) throw DomainError("x_max must exceed rho");
  if (points < 3) throw DomainError("grid needs at least three points");

  // ln f(x) = k x (ln rho - ln x) - ln x
  std::vector<double> log_f(points);
  const double h = (x_max - rho) / static_cast<double>(points - 1);
  for (std::size_t j = 0; j < points; ++j) {
    const double x = rho + h * static_cast<double>(j);
    log_f[j] = k * log_decay_ratio(rho, x) - std::log(x);
  }

  ConvexityScan scan;
  scan.points = points;
  scan.worst_decrease = std::numeric_limits<double>::infinity();
  scan.worst_convexity = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < points; ++j) {
    scan.worst_decrease = std::min(scan.worst_decrease, -std::expm1(log_f[j + 1] - log_f[j]));
  }
  for (std::size_t j = 1; j + 1 < points; ++j) {
    const double second = std::expm1(log_f[j - 1] - log_f[j]) + std::expm1(log_f[j + 1] - log_f[j]);
    scan.worst_convexity = std::min(scan.worst_convexity, second);
  }
  scan.decreasing = scan.worst_decrease > 0.0;
  scan.convex = scan.worst_convexity > 0.0;
  return scan;
}

}  // namespace flexnet
