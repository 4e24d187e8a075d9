#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flexnet/errors.hpp"
#include "flexnet/exact.hpp"
#include "flexnet/model.hpp"
#include "flexnet/sim.hpp"
#include "flexnet/stability.hpp"
#include "flexnet/transforms.hpp"
#include "json.hpp"

namespace flexnet {

// ---------------------------------------------------------------- tables

/// Long-format table. Cells are preformatted strings; `numeric[c]` says
/// whether column c is emitted as a JSON number.
struct Table {
  std::vector<std::string> columns;
  std::vector<bool> numeric;
  std::vector<std::vector<std::string>> rows;

  void add_column(std::string name, bool is_numeric = true);
  void add_row(std::vector<std::string> cells);
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

std::string format_number(double x);

/// Writes `text` to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& text);

// ----------------------------------------------------------- experiments

enum class Method { Exact, Simulate };

std::string to_string(Method method);
Method parse_method(const std::string& name);

/// Family instance with every mu = 1 and every lambda = load * lambda*,
/// where lambda* is the uniform arrival rate at which the unit-rate family
/// member hits the stability boundary.
NetworkModel scaled_family(const std::string& family, int n, double load);

/// Same convention applied to an arbitrary model.
NetworkModel scale_to_load(const NetworkModel& model, double load);

struct ModelSource {
  /// Model file; empty when a family is used.
  std::string path;
  /// "g1" or "g2".
  std::string family;
  int n = 0;
  double load = 0.8;
};

NetworkModel resolve_model(const ModelSource& source);

struct ExperimentSpec {
  ModelSource source;
  Method method = Method::Exact;
  /// Any of "prop1", "thm1", "thm2", "thm3". prop1 needs a simple model.
  std::vector<std::string> bounds{"thm1", "thm2", "thm3"};
  int i_max = 10;
  AutoCapOptions exact;
  SimConfig sim;
  std::size_t replications = 1;

  /// Throws ModelError for an unknown bound or family, DomainError for
  /// incomplete method parameters. An empty source is allowed here; it is
  /// rejected when the model is resolved.
  void validate() const;
};

struct BoundCheck {
  std::string name;
  double value = 0.0;
  double log_value = 0.0;
  /// The bound is claimed at this level.
  bool asserted = false;
  /// estimate + half_width + slack >= value; true when not asserted.
  bool pass = true;
};

struct VerificationRow {
  int i = 0;
  double estimate = 0.0;
  double half_width = 0.0;
  double slack = 0.0;
  std::vector<BoundCheck> bounds;

  bool pass() const;
};

struct OccupancyEstimate {
  OccupancyCurve curve;
  /// Added to every comparison: truncation slack plus solver tolerance for
  /// exact solves, zero for simulation.
  double slack = 0.0;
  Method method = Method::Exact;
  std::optional<ExactResult> exact;
  std::optional<SimResult> sim;
};

/// Exact solve or simulation per the spec. i_max levels are guaranteed:
/// exact curves shorter than i_max + 1 are padded with zeros.
OccupancyEstimate estimate(const NetworkModel& model, const ExperimentSpec& spec);

struct Verification {
  NetworkModel model;
  StabilityVerdict verdict;
  double rho0 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  /// Smallest level at which some requested bound is asserted.
  int valid_from = 0;
  OccupancyEstimate occupancy;
  std::vector<VerificationRow> rows;

  bool pass() const;
  Table table() const;
};

/// Thrown when a verification input is not ergodic; carries the verdict.
class StabilityRejection : public StabilityError {
 public:
  StabilityRejection(const std::string& what, StabilityVerdict verdict)
      : StabilityError(what), verdict(std::move(verdict)) {}
  StabilityVerdict verdict;
};

/// Checks ergodicity, estimates occupancy and audits the requested bounds
/// with (lambda0, mu0) = (min lambda, max mu). Rows cover
/// [valid_from, i_max].
Verification run_verification(const ExperimentSpec& spec);
Verification run_verification(const NetworkModel& model, const ExperimentSpec& spec);

std::vector<VerificationRow> verification_rows(const NetworkModel& model,
                                               const OccupancyEstimate& occ,
                                               const std::vector<std::string>& bounds, int i_max,
                                               int* valid_from = nullptr);

// ------------------------------------------------------------ family sweep

struct SweepSpec {
  std::string family = "g1";
  int n_min = 1;
  int n_max = 20;
  double load = 0.8;
  Method method = Method::Simulate;
  int i_max = 10;
  AutoCapOptions exact;
  SimConfig sim;
  std::size_t replications = 1;
};

/// One row per (n, i), i = 0..i_max. Columns: n, i, alpha, beta (exact
/// rationals as text), alpha_limit, beta_limit (family limits, "inf" when
/// unbounded), rho0, valid_from, estimate, half_width, slack, thm1, thm2,
/// thm3, asserted, pass. Throws StabilityRejection naming the offending n.
Table run_family_sweep(const SweepSpec& spec, bool* all_pass = nullptr);

// ------------------------------------------------------- random models

struct SamplerOptions {
  int max_dispatchers = 3;
  int max_servers = 3;
  double edge_probability = 0.5;
  double rate_min = 0.2;
  double rate_max = 2.0;
  /// Required stability margin (minimum subset slack, in rate units).
  double min_margin = 0.05;
  /// When set, models whose exact solve cannot reach this boundary mass
  /// within `exact.max_states` are resampled.
  std::optional<AutoCapOptions> solvable;
  /// Solvable models must also fit the state budget at the cap they needed
  /// with this many extra servers (room for an edge simplification).
  int spare_servers = 0;
  int max_attempts = 100000;
};

struct SampledModel {
  NetworkModel model;
  /// Rejections before acceptance.
  int rejected = 0;
  std::optional<ExactResult> exact;
};

/// Uniform |D| and |S| in 1..max, edges i.i.d. with the given probability
/// conditioned on no isolated node, rates log-uniform on [rate_min,
/// rate_max], singleton partition; resampled until ergodic with the
/// required margin (and solvable, if requested).
SampledModel sample_model(std::mt19937_64& rng, const SamplerOptions& options);

// --------------------------------------------------- monotonicity battery

struct MonotonicityEntry {
  std::size_t model_index = 0;
  TransformKind kind = TransformKind::ArrivalDecrease;
  std::string detail;
  bool identity = false;
  bool ergodic_after = true;
  double worst_margin = 0.0;
  double slack = 0.0;
  std::size_t violations = 0;
  std::string error;
};

struct KindSummary {
  TransformKind kind = TransformKind::ArrivalDecrease;
  std::size_t compared = 0;
  std::size_t violations = 0;
  std::size_t errors = 0;
  double worst_margin = 0.0;
  /// worst_margin + slack of the entry that attains it; >= 0 means clean.
  double worst_adjusted = 0.0;
};

struct MonotonicityReport {
  std::vector<MonotonicityEntry> entries;
  std::vector<KindSummary> kinds;
  bool ok() const;
  Table table() const;
};

struct MonotonicityOptions {
  std::size_t count = 50;
  std::uint64_t seed = 1;
  int i_max = 10;
  SamplerOptions sampler;
  AutoCapOptions exact;
};

/// Samples `count` models and applies arrival decrease, service increase and
/// edge simplification to each, comparing exact tails of the original
/// (dominating side) against the transformed model.
MonotonicityReport run_monotonicity_battery(const MonotonicityOptions& options);

}  // namespace flexnet
