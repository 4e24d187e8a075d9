#include "flexnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "flexnet/errors.hpp"

namespace flexnet {

namespace {

std::unordered_map<std::string, std::size_t> index_ids(
    const std::vector<std::string>& ids, const char* kind) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!index.emplace(ids[i], i).second) {
      throw ModelError(std::string("duplicate ") + kind + " id " + ids[i]);
    }
  }
  return index;
}

}  // namespace

BipartiteGraph::BipartiteGraph(std::vector<std::string> dispatchers,
                               std::vector<std::string> servers,
                               const std::vector<Edge>& edges)
    : dispatchers_(std::move(dispatchers)), servers_(std::move(servers)) {
  if (dispatchers_.empty()) throw ModelError("graph has no dispatchers");
  if (servers_.empty()) throw ModelError("graph has no servers");
  dispatcher_index_ = index_ids(dispatchers_, "dispatcher");
  server_index_ = index_ids(servers_, "server");

  dispatcher_adj_.resize(dispatchers_.size());
  server_adj_.resize(servers_.size());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [d_id, u_id] : edges) {
    auto d = dispatcher_index_.find(d_id);
    if (d == dispatcher_index_.end()) {
      throw ModelError("edge references unknown dispatcher " + d_id);
    }
    auto u = server_index_.find(u_id);
    if (u == server_index_.end()) {
      throw ModelError("edge references unknown server " + u_id);
    }
    if (!seen.emplace(d->second, u->second).second) {
      throw ModelError("duplicate edge (" + d_id + "," + u_id + ")");
    }
    dispatcher_adj_[d->second].push_back(u->second);
    server_adj_[u->second].push_back(d->second);
  }
  num_edges_ = seen.size();

  for (std::size_t d = 0; d < dispatchers_.size(); ++d) {
    if (dispatcher_adj_[d].empty()) throw ModelError("isolated dispatcher " + dispatchers_[d]);
    std::sort(dispatcher_adj_[d].begin(), dispatcher_adj_[d].end());
  }
  for (std::size_t u = 0; u < servers_.size(); ++u) {
    if (server_adj_[u].empty()) throw ModelError("isolated server " + servers_[u]);
    std::sort(server_adj_[u].begin(), server_adj_[u].end());
  }
}

std::optional<std::size_t> BipartiteGraph::find_dispatcher(std::string_view id) const {
  auto it = dispatcher_index_.find(std::string(id));
  if (it == dispatcher_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> BipartiteGraph::find_server(std::string_view id) const {
  auto it = server_index_.find(std::string(id));
  if (it == server_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t BipartiteGraph::dispatcher_index(std::string_view id) const {
  auto d = find_dispatcher(id);
  if (!d) throw ModelError("unknown dispatcher " + std::string(id));
  return *d;
}

std::size_t BipartiteGraph::server_index(std::string_view id) const {
  auto u = find_server(id);
  if (!u) throw ModelError("unknown server " + std::string(id));
  return *u;
}

bool BipartiteGraph::has_edge(std::size_t d, std::size_t u) const {
  const auto& adj = dispatcher_adj_[d];
  return std::binary_search(adj.begin(), adj.end(), u);
}

std::vector<std::pair<std::size_t, std::size_t>> BipartiteGraph::edge_indices() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(num_edges_);
  for (std::size_t d = 0; d < dispatchers_.size(); ++d) {
    for (std::size_t u : dispatcher_adj_[d]) out.emplace_back(d, u);
  }
  return out;
}

std::vector<Edge> BipartiteGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges_);
  for (const auto& [d, u] : edge_indices()) out.emplace_back(dispatchers_[d], servers_[u]);
  return out;
}

bool BipartiteGraph::operator==(const BipartiteGraph& other) const {
  return dispatchers_ == other.dispatchers_ && servers_ == other.servers_ &&
         dispatcher_adj_ == other.dispatcher_adj_;
}

DeparturePartition DeparturePartition::singletons(std::size_t num_servers) {
  DeparturePartition p;
  p.blocks.reserve(num_servers);
  for (std::size_t u = 0; u < num_servers; ++u) p.blocks.push_back({u});
  return p;
}

NetworkModel::NetworkModel(BipartiteGraph graph, RateSpec rates,
                           std::optional<DeparturePartition> partition)
    : graph_(std::move(graph)), rates_(std::move(rates)) {
  const std::size_t nd = graph_.num_dispatchers();
  const std::size_t ns = graph_.num_servers();
  if (rates_.lambda.size() != nd) throw ModelError("arrival rate count does not match dispatchers");
  if (rates_.mu.size() != ns) throw ModelError("service rate count does not match servers");
  for (std::size_t d = 0; d < nd; ++d) {
    double r = rates_.lambda[d];
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw ModelError("nonpositive or nonfinite rate for dispatcher " + graph_.dispatcher_id(d));
    }
  }
  for (std::size_t u = 0; u < ns; ++u) {
    double r = rates_.mu[u];
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw ModelError("nonpositive or nonfinite rate for server " + graph_.server_id(u));
    }
  }

  partition_ = partition ? std::move(*partition) : DeparturePartition::singletons(ns);
  constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  block_of_.assign(ns, kUnassigned);
  for (auto& block : partition_.blocks) {
    if (block.empty()) throw ModelError("empty partition block");
    std::sort(block.begin(), block.end());
  }
  std::sort(partition_.blocks.begin(), partition_.blocks.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (std::size_t b = 0; b < partition_.blocks.size(); ++b) {
    const auto& block = partition_.blocks[b];
    for (std::size_t u : block) {
      if (u >= ns) throw ModelError("partition references unknown server index");
      if (block_of_[u] != kUnassigned) {
        throw ModelError("server " + graph_.server_id(u) + " appears in more than one block");
      }
      block_of_[u] = b;
      if (rates_.mu[u] != rates_.mu[block.front()]) {
        throw ModelError("unequal rates in block containing " + graph_.server_id(block.front()) +
                         " and " + graph_.server_id(u));
      }
    }
  }
  for (std::size_t u = 0; u < ns; ++u) {
    if (block_of_[u] == kUnassigned) {
      throw ModelError("server " + graph_.server_id(u) + " missing from partition");
    }
  }
}

double NetworkModel::total_arrival_rate() const {
  double total = 0.0;
  for (double r : rates_.lambda) total += r;
  return total;
}

double NetworkModel::total_block_rate() const {
  double total = 0.0;
  for (std::size_t b = 0; b < partition_.blocks.size(); ++b) total += block_rate(b);
  return total;
}

RateBounds NetworkModel::default_rate_bounds() const {
  return {*std::min_element(rates_.lambda.begin(), rates_.lambda.end()),
          *std::max_element(rates_.mu.begin(), rates_.mu.end())};
}

void NetworkModel::check_rate_bounds(const RateBounds& bounds) const {
  const RateBounds tight = default_rate_bounds();
  if (!(bounds.lambda0 > 0.0) || bounds.lambda0 > tight.lambda0) {
    throw ModelError("lambda0 must lie in (0, min lambda]");
  }
  if (!std::isfinite(bounds.mu0) || bounds.mu0 < tight.mu0) {
    throw ModelError("mu0 must lie in [max mu, inf)");
  }
}

bool NetworkModel::is_simple() const {
  if (graph_.num_dispatchers() != 1) return false;
  if (graph_.dispatcher_degree(0) != graph_.num_servers()) return false;
  if (partition_.blocks.size() != graph_.num_servers()) return false;
  return std::all_of(rates_.mu.begin(), rates_.mu.end(),
                     [&](double m) { return m == rates_.mu.front(); });
}

bool NetworkModel::operator==(const NetworkModel& other) const {
  return graph_ == other.graph_ && rates_ == other.rates_ && partition_ == other.partition_;
}

NetworkModel with_uniform_rates(const NetworkModel& model, double lambda, double mu) {
  RateSpec rates{std::vector<double>(model.graph().num_dispatchers(), lambda),
                 std::vector<double>(model.graph().num_servers(), mu)};
  return NetworkModel(model.graph(), std::move(rates), model.partition());
}

std::vector<double> occupancy_of_state(const QueueState& state) {
  if (state.lengths.empty()) throw ModelError("queue state has no servers");
  int max_len = 0;
  for (int x : state.lengths) {
    if (x < 0) throw ModelError("negative queue length");
    max_len = std::max(max_len, x);
  }
  // counts[i] = #servers with exactly i tasks, then suffix sums.
  std::vector<double> q(static_cast<std::size_t>(max_len) + 1, 0.0);
  for (int x : state.lengths) q[static_cast<std::size_t>(x)] += 1.0;
  for (std::size_t i = q.size() - 1; i > 0; --i) q[i - 1] += q[i];
  const double n = static_cast<double>(state.lengths.size());
  for (double& v : q) v /= n;
  return q;
}

bool OccupancyCurve::satisfies_invariants(double tol) const {
  if (values.empty() || std::abs(values.front() - 1.0) > tol) return false;
  if (half_widths.size() != values.size()) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < -tol || values[i] > 1.0 + tol) return false;
    if (i > 0 && values[i] > values[i - 1] + tol) return false;
    if (half_widths[i] < 0.0) return false;
  }
  return truncation_slack >= 0.0;
}

NetworkModel family_g1(int n) {
  if (n < 1) throw ModelError("family_g1 requires n >= 1");
  std::vector<std::string> dispatchers;
  std::vector<std::string> servers;
  std::vector<Edge> edges;
  for (int i = 1; i <= n; ++i) servers.push_back("u" + std::to_string(i));
  for (int i = 1; i <= n; ++i) {
    dispatchers.push_back("r" + std::to_string(i));
    edges.emplace_back(dispatchers.back(), servers[i - 1]);
  }
  for (int j = 1; j <= n; ++j) {
    dispatchers.push_back("b" + std::to_string(j));
    for (const auto& u : servers) edges.emplace_back(dispatchers.back(), u);
  }
  RateSpec rates{std::vector<double>(dispatchers.size(), 1.0),
                 std::vector<double>(servers.size(), 1.0)};
  return NetworkModel(BipartiteGraph(std::move(dispatchers), std::move(servers), edges),
                      std::move(rates));
}

NetworkModel family_g2(int n) {
  if (n < 1) throw ModelError("family_g2 requires n >= 1");
  std::vector<std::string> dispatchers{"h"};
  std::vector<std::string> servers;
  std::vector<Edge> edges;
  for (int i = 1; i <= n; ++i) {
    servers.push_back("h" + std::to_string(i));
    edges.emplace_back("h", servers.back());
  }
  for (int i = 1; i <= n; ++i) {
    dispatchers.push_back("p" + std::to_string(i));
    servers.push_back("q" + std::to_string(i));
    edges.emplace_back(dispatchers.back(), servers.back());
  }
  RateSpec rates{std::vector<double>(dispatchers.size(), 1.0),
                 std::vector<double>(servers.size(), 1.0)};
  return NetworkModel(BipartiteGraph(std::move(dispatchers), std::move(servers), edges),
                      std::move(rates));
}

}  // namespace flexnet
