#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "flexnet/model.hpp"

namespace flexnet {

// Event driven simulation of the load balancing chain.
//
// All clocks are exponential with state independent rates (a block clock
// keeps ticking when its servers are empty), so the next event is drawn as
// one exponential at the total rate followed by a categorical pick. Event
// timing and JSQ tie breaking use separate generators.

struct SimConfig {
  double horizon = 1e5;
  /// Fraction of the horizon discarded before measuring.
  double burn_in = 0.2;
  /// Equal-time batches for the batch means confidence interval.
  int batches = 20;
  std::uint64_t seed = 1;
  /// Occupancy levels 0..i_max are reported.
  int i_max = 10;
  /// Abort once the total number of tasks exceeds this.
  double divergence_guard = 1e6;
  /// Two sided confidence level of the reported half widths.
  double confidence = 0.99;

  /// Throws DomainError on an invalid field.
  void validate() const;
};

struct SimResult {
  /// Time averaged E[q(i)], i = 0..i_max, with batch means half widths.
  OccupancyCurve occupancy;
  /// batch_occupancy[b][i]: batch b time average of q(i). Kept for pooling.
  std::vector<std::vector<double>> batch_occupancy;
  std::vector<double> batch_total_tasks;
  /// Mean sojourn of the tasks that departed within each batch (NaN when a
  /// batch saw no departure).
  std::vector<double> batch_sojourn;

  double mean_total_tasks = 0.0;
  double total_tasks_half_width = 0.0;
  /// Time average of (1/|S|) sum_{i > i_max} #{u : X(u) >= i}, so that
  /// mean_total_tasks = |S| (sum_{i=1..i_max} E[q(i)] + beyond_i_max).
  double beyond_i_max = 0.0;
  std::vector<double> server_mean_length;
  std::vector<double> server_length_half_width;
  double mean_sojourn = 0.0;
  double sojourn_half_width = 0.0;
  std::uint64_t departures_measured = 0;

  std::uint64_t events = 0;
  std::size_t replications = 1;
  bool aborted_unstable = false;
  /// Diagnostics for an aborted run: simulated time and task count at the
  /// abort, and their ratio as a growth rate.
  double abort_time = 0.0;
  double abort_total_tasks = 0.0;
  double growth_rate = 0.0;
};

/// Throws DomainError for an invalid config. An aborted run is returned with
/// aborted_unstable set and its estimates left empty.
SimResult simulate(const NetworkModel& model, const SimConfig& config);

/// Seed of replication k: the base seed itself for k = 0, a splitmix64 mix of
/// (seed, k) otherwise.
std::uint64_t replication_seed(std::uint64_t seed, std::size_t k);

/// Independent replications merged by pooling their batch means. One
/// replication reproduces simulate() exactly. Replications run on up to
/// `threads` threads (0 = hardware concurrency); the result does not depend
/// on the thread count.
SimResult estimate_occupancy(const NetworkModel& model, const SimConfig& config,
                             std::size_t replications, unsigned threads = 0);

struct CouplingReport {
  std::uint64_t events = 0;
  /// Events after which sum_u X(u) < Y.
  std::uint64_t violations = 0;
  /// Events after which sum_u X(u) == Y.
  std::uint64_t equalities = 0;
  double final_time = 0.0;
  long final_total = 0;
  long final_fast = 0;
};

/// Simple JSQ system with s unit-rate servers and arrival rate rho, coupled
/// to an M/M/1 queue with service rate s: shared arrivals and one potential
/// departure clock at rate s whose firings serve the fast queue and a
/// uniformly chosen server. Runs until `horizon` or `max_events`, whichever
/// comes first, checking domination after every event.
CouplingReport coupled_prop1_run(int s, double rho, double horizon, std::uint64_t seed,
                                 std::uint64_t max_events);

struct LittleReport {
  /// |mean_total_tasks - |S| sum_{i>=1} E[q(i)]|; zero up to rounding.
  double identity_gap = 0.0;
  bool identity_ok = false;
  double lambda_total = 0.0;
  /// L, lambda W and the tolerance they were compared with (sum of the two
  /// half widths).
  double l = 0.0;
  double lambda_w = 0.0;
  double tolerance = 0.0;
  bool little_ok = false;
};

/// Throws DomainError for an aborted result.
LittleReport little_check(const SimResult& result, const NetworkModel& model);

}  // namespace flexnet
