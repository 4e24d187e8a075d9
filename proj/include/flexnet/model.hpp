#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace flexnet {

/// (dispatcher id, server id)
using Edge = std::pair<std::string, std::string>;

/// Dispatcher/server compatibility graph G = (D, S, E).
///
/// Ids are opaque strings. Both node sets keep the order in which they were
/// given; that order defines the dense indices used everywhere else in the
/// library (rate vectors, queue states, generator state encoding).
///
/// A constructed graph always satisfies: unique ids, every edge references
/// existing nodes, no duplicate edges, no isolated nodes.
class BipartiteGraph {
 public:
  BipartiteGraph(std::vector<std::string> dispatchers,
                 std::vector<std::string> servers,
                 const std::vector<Edge>& edges);

  std::size_t num_dispatchers() const { return dispatchers_.size(); }
  std::size_t num_servers() const { return servers_.size(); }
  std::size_t num_edges() const { return num_edges_; }

  const std::vector<std::string>& dispatchers() const { return dispatchers_; }
  const std::vector<std::string>& servers() const { return servers_; }
  const std::string& dispatcher_id(std::size_t d) const { return dispatchers_[d]; }
  const std::string& server_id(std::size_t u) const { return servers_[u]; }

  std::optional<std::size_t> find_dispatcher(std::string_view id) const;
  std::optional<std::size_t> find_server(std::string_view id) const;
  /// Throws ModelError for unknown ids.
  std::size_t dispatcher_index(std::string_view id) const;
  std::size_t server_index(std::string_view id) const;

  /// Servers compatible with dispatcher d, ascending index order.
  const std::vector<std::size_t>& dispatcher_neighbors(std::size_t d) const {
    return dispatcher_adj_[d];
  }
  /// Dispatchers compatible with server u, ascending index order.
  const std::vector<std::size_t>& server_neighbors(std::size_t u) const {
    return server_adj_[u];
  }
  std::size_t dispatcher_degree(std::size_t d) const { return dispatcher_adj_[d].size(); }
  std::size_t server_degree(std::size_t u) const { return server_adj_[u].size(); }

  bool has_edge(std::size_t d, std::size_t u) const;

  /// Edges as index pairs, ordered by dispatcher then server.
  std::vector<std::pair<std::size_t, std::size_t>> edge_indices() const;
  /// Edges as id pairs, same order as edge_indices().
  std::vector<Edge> edges() const;

  bool operator==(const BipartiteGraph& other) const;

 private:
  std::vector<std::string> dispatchers_;
  std::vector<std::string> servers_;
  std::unordered_map<std::string, std::size_t> dispatcher_index_;
  std::unordered_map<std::string, std::size_t> server_index_;
  std::vector<std::vector<std::size_t>> dispatcher_adj_;
  std::vector<std::vector<std::size_t>> server_adj_;
  std::size_t num_edges_ = 0;
};

/// Arrival rates per dispatcher and service rates per server, aligned with
/// the graph's index order. Units: tasks per unit time.
struct RateSpec {
  std::vector<double> lambda;
  std::vector<double> mu;

  bool operator==(const RateSpec&) const = default;
};

/// Groups of servers that share one potential-departure clock. Blocks hold
/// server indices.
struct DeparturePartition {
  std::vector<std::vector<std::size_t>> blocks;

  static DeparturePartition singletons(std::size_t num_servers);

  bool operator==(const DeparturePartition&) const = default;
};

/// Admissible (lambda_0, mu_0) pair: lambda_0 <= min lambda, mu_0 >= max mu.
struct RateBounds {
  double lambda0 = 0.0;
  double mu0 = 0.0;

  double rho0() const { return lambda0 / mu0; }
};

/// Full system description: graph, rates and departure partition.
///
/// Validated on construction. Blocks are normalized (each block sorted,
/// blocks ordered by their smallest server index) so that equality is
/// structural.
class NetworkModel {
 public:
  /// An omitted partition means every server has its own departure clock.
  NetworkModel(BipartiteGraph graph, RateSpec rates,
               std::optional<DeparturePartition> partition = std::nullopt);

  const BipartiteGraph& graph() const { return graph_; }
  const RateSpec& rates() const { return rates_; }
  const DeparturePartition& partition() const { return partition_; }

  double lambda(std::size_t d) const { return rates_.lambda[d]; }
  double mu(std::size_t u) const { return rates_.mu[u]; }
  std::size_t block_of(std::size_t u) const { return block_of_[u]; }
  /// Service rate shared by every server of block b.
  double block_rate(std::size_t b) const { return rates_.mu[partition_.blocks[b].front()]; }

  double total_arrival_rate() const;
  double total_block_rate() const;

  /// Tightest admissible bounds: (min lambda, max mu).
  RateBounds default_rate_bounds() const;
  double lambda0() const { return default_rate_bounds().lambda0; }
  double mu0() const { return default_rate_bounds().mu0; }
  double rho0() const { return default_rate_bounds().rho0(); }

  /// Throws ModelError unless lambda0 <= min lambda and mu0 >= max mu.
  void check_rate_bounds(const RateBounds& bounds) const;

  /// One dispatcher, complete edge set, constant service rate, singleton
  /// partition.
  bool is_simple() const;

  bool operator==(const NetworkModel& other) const;

 private:
  BipartiteGraph graph_;
  RateSpec rates_;
  DeparturePartition partition_;
  std::vector<std::size_t> block_of_;
};

/// Same graph and partition, every lambda set to `lambda` and every mu to `mu`.
NetworkModel with_uniform_rates(const NetworkModel& model, double lambda, double mu);

/// Per-server queue lengths (tasks in queue including the one in service),
/// aligned with the graph's server order.
struct QueueState {
  std::vector<int> lengths;
};

/// q(i) = fraction of servers holding at least i tasks, for
/// i = 0..max length. Levels beyond the returned range are zero.
std::vector<double> occupancy_of_state(const QueueState& state);

enum class OccupancySource { Exact, Simulated };

/// Estimates of E[q(i)] for i = 0..values.size()-1.
struct OccupancyCurve {
  std::vector<double> values;
  std::vector<double> half_widths;
  OccupancySource source = OccupancySource::Exact;
  /// Only meaningful for exact curves.
  double truncation_slack = 0.0;

  std::size_t size() const { return values.size(); }
  /// values[0] == 1, nonincreasing, in [0, 1]; half widths >= 0.
  bool satisfies_invariants(double tol = 1e-12) const;
};

/// Graph with n servers u1..un and 2n dispatchers: a dedicated dispatcher
/// r_i with the single edge (r_i, u_i), plus b1..bn each connected to every
/// server. alpha = 1 and beta = (n + 1) / 2. Unit rates.
NetworkModel family_g1(int n);

/// Hub dispatcher h connected to servers h1..hn plus n isolated pairs
/// (p_i, q_i). alpha = (n + 1) / 2 and beta = 2n / (n + 1). Unit rates.
NetworkModel family_g2(int n);

}  // namespace flexnet
