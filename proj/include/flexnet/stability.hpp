#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "flexnet/model.hpp"

namespace flexnet {

enum class Ergodicity { Ergodic, NotErgodic, Boundary };

std::string to_string(Ergodicity status);

/// Outcome of the subset test
///
///   sum_{d : N(d) subset of U} lambda(d)  <  sum_{u in U} mu(u)   for all U != {}.
///
/// slack(U) is the right side minus the left side; margin is its minimum.
struct StabilityVerdict {
  Ergodicity status = Ergodicity::Ergodic;
  /// Smallest subset (by cardinality, then by slack, then by index mask) with
  /// negative slack for NotErgodic, or zero slack for Boundary. Server indices.
  std::optional<std::vector<std::size_t>> witness;
  double margin = 0.0;
  /// A subset attaining the margin, always present.
  std::vector<std::size_t> tightest;
  /// True when every comparison was carried out in scaled integer arithmetic.
  bool exact_arithmetic = false;
};

struct StabilityOptions {
  std::size_t max_servers = 25;
  /// Relative band that counts as zero slack when rates are not short decimals.
  double epsilon = 1e-12;
};

/// Throws CapacityError when the server count exceeds options.max_servers.
StabilityVerdict check_ergodic(const NetworkModel& model, const StabilityOptions& options = {});

/// Same verdict from |S| minimum cuts instead of subset enumeration, for
/// models of any size. The minimum of slack(U) over U containing a given
/// server u is a min cut of source -> d (lambda(d)) -> u' (unbounded) ->
/// sink (mu(u')) with u forced to the source side. margin and status agree
/// with check_ergodic; the witness is the inclusion-minimal minimizer for
/// the first server attaining the smallest slack, so it need not be of
/// smallest cardinality.
StabilityVerdict check_ergodic_by_cut(const NetworkModel& model,
                                      const StabilityOptions& options = {});

/// check_ergodic up to options.max_servers, check_ergodic_by_cut above.
StabilityVerdict classify_ergodicity(const NetworkModel& model,
                                     const StabilityOptions& options = {});

/// Largest common factor c such that scaling every lambda by c keeps the
/// model on the boundary of the stability region:
/// c* = min_U mu(U) / lambda(confined to U). The model with lambda scaled by
/// any c < c* is ergodic. Enumerates subsets up to options.max_servers and
/// iterates ratio-improving minimum cuts above that.
double critical_arrival_scale(const NetworkModel& model, const StabilityOptions& options = {});

}  // namespace flexnet
