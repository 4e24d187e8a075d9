#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flexnet/model.hpp"

namespace flexnet {

enum class TransformKind { ArrivalDecrease, ServiceIncrease, EdgeSimplify, FullSimplify, GammaSplit };

std::string to_string(TransformKind kind);

/// What a transformation did. `mapping` lists, in the output model's server
/// order, each output server id with the input server it originates from
/// (itself when unchanged).
struct TransformRecord {
  TransformKind kind = TransformKind::ArrivalDecrease;
  std::vector<std::pair<std::string, std::string>> mapping;
  std::vector<Edge> removed_edges;
  std::vector<Edge> added_edges;
  /// Edge simplification of a server's only edge leaves the model unchanged.
  bool identity = false;
  std::optional<double> gamma;
  /// Dispatchers with degree below gamma and the servers they reach.
  std::vector<std::string> gamma_dispatchers;
  std::vector<std::string> gamma_servers;
};

template <typename M>
struct Transformed {
  M model;
  TransformRecord record;
};

/// Lowers the listed dispatchers' arrival rates; others are kept. Throws
/// ModelError for unknown ids, increases, or nonpositive rates.
Transformed<NetworkModel> decrease_arrivals(const NetworkModel& model,
                                            const std::map<std::string, double>& new_lambda);

/// Raises the listed servers' service rates. The result must stay constant on
/// each departure block.
Transformed<NetworkModel> increase_service(const NetworkModel& model,
                                           const std::map<std::string, double>& new_mu);

/// Moves edge (d, u) to a fresh server v = "u@d" that joins u's departure
/// block with rate mu(u). Identity when u has degree one.
Transformed<NetworkModel> edge_simplify(const NetworkModel& model, const Edge& edge);

/// Simplifies every edge at once: one server copy u@d per edge, copies of a
/// block's servers forming one block. Dispatcher degrees are preserved and
/// every server ends with degree one.
Transformed<NetworkModel> full_simplify(const NetworkModel& model);

struct GammaSplit {
  /// Input with every edge from a high-degree dispatcher into the gamma
  /// servers simplified away.
  NetworkModel g0_model;
  /// Subnetwork on the low-degree dispatchers and the servers they reach,
  /// departure blocks restricted to those servers.
  NetworkModel g_gamma_model;
  TransformRecord record;
};

/// Requires gamma > beta(graph); throws DomainError otherwise.
GammaSplit gamma_split(const NetworkModel& model, double gamma);

/// Output-server -> input-server index map for a record produced from `from`
/// to `to`. Throws ModelError when an id is missing.
std::vector<std::size_t> origin_indices(const TransformRecord& record, const NetworkModel& from,
                                        const NetworkModel& to);

/// Canonical text form of a model up to server renaming: dispatcher ids and
/// rates are kept, servers are described by (sorted neighbour ids, rate) and
/// grouped by departure block. Equal strings mean isomorphic models.
std::string canonical_form(const NetworkModel& model);

}  // namespace flexnet
