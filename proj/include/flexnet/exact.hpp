#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flexnet/model.hpp"

namespace flexnet {

// Exact stationary analysis of the load balancing chain truncated at a
// per-server queue cap B.
//
// State encoding: mixed radix with base B + 1, server 0 least significant,
// so the state space is {0..B}^|S| with (B + 1)^|S| states.
//
// Truncation: an arrival whose shortest compatible queues are all at B is
// dropped. Shortest queues are computed over the true lengths, so routing is
// unchanged everywhere else. Each departure block fires at its rate and
// removes one task from every nonempty member.

struct ChainOptions {
  std::size_t max_states = 5'000'000;
};

struct TruncatedChain {
  NetworkModel model;
  std::size_t num_servers = 0;
  int cap = 0;
  std::size_t num_states = 0;
  /// stride[u] = (B + 1)^u
  std::vector<std::size_t> stride;
  /// Off-diagonal transitions in compressed rows: targets of state s are
  /// target[row_start[s] .. row_start[s + 1]).
  std::vector<std::size_t> row_start;
  std::vector<std::uint32_t> target;
  std::vector<double> rate;
  /// -Q(s, s)
  std::vector<double> exit_rate;

  std::vector<int> decode(std::size_t state) const;
  std::size_t encode(std::span<const int> lengths) const;
  double max_exit_rate() const;
};

/// Throws CapacityError when (cap + 1)^|S| exceeds options.max_states.
TruncatedChain build_generator(const NetworkModel& model, int cap, const ChainOptions& options = {});

enum class SolverMethod {
  /// Direct when the recurrent part is small enough, power iteration otherwise.
  Auto,
  /// Power iteration on the uniformized kernel.
  Power,
  /// Sparse LU on the generator with the empty state pinned.
  Direct,
};

std::string to_string(SolverMethod method);

struct SolverOptions {
  /// Power iteration stops when successive iterates differ by less than tol
  /// in max norm.
  double tol = 1e-12;
  SolverMethod method = SolverMethod::Auto;
  std::size_t max_iterations = 10'000'000;
  /// Auto switches to power iteration above this many reachable states.
  std::size_t direct_max_states = 30'000;
  /// Refuse models that the subset test does not classify as ergodic.
  bool require_ergodic = true;
};

struct StationarySolution {
  std::size_t num_servers = 0;
  int cap = 0;
  /// Probability over all (B + 1)^|S| states; zero off the class reachable
  /// from the empty state.
  std::vector<double> pi;
  /// max_j |(pi Q)_j|
  double residual = 0.0;
  /// Probability of states with some queue at the cap.
  double boundary_mass = 0.0;
  /// boundary_mass / (1 - r), with r the ratio P(max queue = B) /
  /// P(max queue = B - 1) clamped to [0, 0.999]: boundary mass plus a
  /// geometric estimate of the mass the cap cuts off.
  double truncation_slack = 0.0;
  /// The clamped ratio r above.
  double tail_ratio = 0.0;
  /// Error allowance for pi: the requested tol, raised for power iteration to
  /// the geometric estimate of its remaining error when that is larger.
  double tol = 0.0;
  std::size_t iterations = 0;
  std::size_t reachable_states = 0;
  SolverMethod method = SolverMethod::Direct;
};

/// Solves pi Q = 0, sum pi = 1. Throws StabilityError for models that are
/// not ergodic (when options.require_ergodic), ConvergenceError when power
/// iteration exceeds its iteration cap.
StationarySolution stationary(const TruncatedChain& chain, const SolverOptions& options = {});

struct ExactOccupancy {
  /// E[q(i)] for i = 0..B; half widths are zero.
  OccupancyCurve curve;
  /// server_tails[u][i] = P(X(u) >= i), i = 0..B
  std::vector<std::vector<double>> server_tails;
  /// E[sum_u X(u)] computed directly from pi.
  double mean_total_tasks = 0.0;
  double boundary_mass = 0.0;
  double tol = 0.0;
};

ExactOccupancy occupancy_exact(const StationarySolution& solution);

struct TailComparison {
  /// min over (w, i) of P(X_A(map(w)) >= i) - P(X_B(w) >= i)
  double worst_margin = 0.0;
  std::size_t worst_server = 0;
  int worst_level = 0;
  /// truncation slack of both sides + 2 tol
  double slack = 0.0;
  std::size_t violations = 0;
  std::size_t comparisons = 0;

  bool ok() const { return violations == 0; }
};

/// Checks that side A dominates side B in tail probability. mapping[w] is
/// the A-server paired with B-server w. Levels 0..i_max; beyond a side's cap
/// its tail counts as zero.
TailComparison tail_compare(const ExactOccupancy& a, const ExactOccupancy& b,
                            std::span<const std::size_t> mapping, int i_max);

struct AutoCapOptions {
  double max_boundary_mass = 1e-10;
  int initial_cap = 12;
  std::size_t max_states = 2'000'000;
  int max_rounds = 4;
  SolverOptions solver;
};

struct ExactResult {
  StationarySolution solution;
  ExactOccupancy occupancy;
};

/// Solves at increasing caps, extrapolating the geometric decay of the
/// boundary mass, until boundary_mass <= max_boundary_mass. Throws
/// CapacityError when the required cap would exceed max_states.
ExactResult solve_to_target(const NetworkModel& model, const AutoCapOptions& options = {});

/// Solve at a fixed cap.
ExactResult solve_at_cap(const NetworkModel& model, int cap, const SolverOptions& options = {});

}  // namespace flexnet
