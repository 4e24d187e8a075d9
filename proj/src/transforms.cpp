#include "flexnet/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_set>

#include "flexnet/errors.hpp"
#include "flexnet/metrics.hpp"

namespace flexnet {

namespace {

std::vector<std::pair<std::string, std::string>> identity_mapping(const BipartiteGraph& g) {
  std::vector<std::pair<std::string, std::string>> m;
  for (const auto& u : g.servers()) m.emplace_back(u, u);
  return m;
}

// "origin@dispatcher", suffixed "#k" while the name is taken.
std::string fresh_server_id(const std::string& origin, const std::string& dispatcher,
                            const std::unordered_set<std::string>& taken) {
  const std::string base = origin + "@" + dispatcher;
  if (!taken.count(base)) return base;
  for (int k = 2;; ++k) {
    std::string candidate = base + "#" + std::to_string(k);
    if (!taken.count(candidate)) return candidate;
  }
}

std::string format_rate(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::ArrivalDecrease: return "arrival-decrease";
    case TransformKind::ServiceIncrease: return "service-increase";
    case TransformKind::EdgeSimplify: return "edge-simplify";
    case TransformKind::FullSimplify: return "full-simplify";
    case TransformKind::GammaSplit: return "gamma-split";
  }
  return "?";
}

Transformed<NetworkModel> decrease_arrivals(const NetworkModel& model,
                                            const std::map<std::string, double>& new_lambda) {
  const auto& g = model.graph();
  RateSpec rates = model.rates();
  for (const auto& [id, rate] : new_lambda) {
    const std::size_t d = g.dispatcher_index(id);
    if (!(rate > 0.0)) throw ModelError("nonpositive arrival rate for dispatcher " + id);
    if (rate > rates.lambda[d]) throw ModelError("arrival rate increase attempted for dispatcher " + id);
    rates.lambda[d] = rate;
  }
  TransformRecord rec;
  rec.kind = TransformKind::ArrivalDecrease;
  rec.mapping = identity_mapping(g);
  return {NetworkModel(g, std::move(rates), model.partition()), std::move(rec)};
}

Transformed<NetworkModel> increase_service(const NetworkModel& model,
                                           const std::map<std::string, double>& new_mu) {
  const auto& g = model.graph();
  RateSpec rates = model.rates();
  for (const auto& [id, rate] : new_mu) {
    const std::size_t u = g.server_index(id);
    if (!std::isfinite(rate)) throw ModelError("nonfinite service rate for server " + id);
    if (rate < rates.mu[u]) throw ModelError("service rate decrease attempted for server " + id);
    rates.mu[u] = rate;
  }
  for (const auto& block : model.partition().blocks) {
    for (std::size_t u : block) {
      if (rates.mu[u] != rates.mu[block.front()]) {
        throw ModelError("block constancy violated: servers " + g.server_id(block.front()) +
                         " and " + g.server_id(u) + " share a departure clock");
      }
    }
  }
  TransformRecord rec;
  rec.kind = TransformKind::ServiceIncrease;
  rec.mapping = identity_mapping(g);
  return {NetworkModel(g, std::move(rates), model.partition()), std::move(rec)};
}

Transformed<NetworkModel> edge_simplify(const NetworkModel& model, const Edge& edge) {
  const auto& g = model.graph();
  const std::size_t d = g.dispatcher_index(edge.first);
  const std::size_t u = g.server_index(edge.second);
  if (!g.has_edge(d, u)) {
    throw ModelError("edge (" + edge.first + "," + edge.second + ") not present");
  }

  TransformRecord rec;
  rec.kind = TransformKind::EdgeSimplify;
  rec.mapping = identity_mapping(g);
  if (g.server_degree(u) == 1) {
    rec.identity = true;
    return {model, std::move(rec)};
  }

  std::unordered_set<std::string> taken(g.servers().begin(), g.servers().end());
  const std::string v = fresh_server_id(edge.second, edge.first, taken);

  std::vector<std::string> servers = g.servers();
  servers.push_back(v);
  std::vector<Edge> edges;
  for (auto& e : g.edges()) {
    if (e != edge) edges.push_back(std::move(e));
  }
  edges.emplace_back(edge.first, v);

  RateSpec rates = model.rates();
  rates.mu.push_back(model.mu(u));
  DeparturePartition partition = model.partition();
  partition.blocks[model.block_of(u)].push_back(servers.size() - 1);

  rec.mapping.emplace_back(v, edge.second);
  rec.removed_edges.push_back(edge);
  rec.added_edges.emplace_back(edge.first, v);
  return {NetworkModel(BipartiteGraph(g.dispatchers(), std::move(servers), edges), std::move(rates),
                       std::move(partition)),
          std::move(rec)};
}

Transformed<NetworkModel> full_simplify(const NetworkModel& model) {
  const auto& g = model.graph();
  TransformRecord rec;
  rec.kind = TransformKind::FullSimplify;

  std::vector<std::string> servers;
  std::vector<Edge> edges;
  RateSpec rates;
  rates.lambda = model.rates().lambda;
  // copies[u] = indices of the copies u@d in the output.
  std::vector<std::vector<std::size_t>> copies(g.num_servers());
  std::unordered_set<std::string> taken;
  for (std::size_t u = 0; u < g.num_servers(); ++u) {
    for (std::size_t d : g.server_neighbors(u)) {
      std::string id = fresh_server_id(g.server_id(u), g.dispatcher_id(d), taken);
      taken.insert(id);
      copies[u].push_back(servers.size());
      servers.push_back(id);
      rates.mu.push_back(model.mu(u));
      edges.emplace_back(g.dispatcher_id(d), id);
      rec.mapping.emplace_back(id, g.server_id(u));
      rec.removed_edges.emplace_back(g.dispatcher_id(d), g.server_id(u));
      rec.added_edges.emplace_back(g.dispatcher_id(d), id);
    }
  }
  DeparturePartition partition;
  for (const auto& block : model.partition().blocks) {
    std::vector<std::size_t> merged;
    for (std::size_t u : block) merged.insert(merged.end(), copies[u].begin(), copies[u].end());
    partition.blocks.push_back(std::move(merged));
  }
  return {NetworkModel(BipartiteGraph(g.dispatchers(), std::move(servers), edges), std::move(rates),
                       std::move(partition)),
          std::move(rec)};
}

GammaSplit gamma_split(const NetworkModel& model, double gamma) {
  const auto& g = model.graph();
  const double b = to_double(beta(g));
  if (!(gamma > b)) throw DomainError("gamma must exceed beta = " + format_rate(b));

  std::vector<bool> low(g.num_dispatchers(), false);
  std::vector<bool> reached(g.num_servers(), false);
  for (std::size_t d = 0; d < g.num_dispatchers(); ++d) {
    if (static_cast<double>(g.dispatcher_degree(d)) < gamma) {
      low[d] = true;
      for (std::size_t u : g.dispatcher_neighbors(d)) reached[u] = true;
    }
  }
  if (std::none_of(low.begin(), low.end(), [](bool x) { return x; })) {
    throw DomainError("no dispatcher has degree below gamma");
  }

  TransformRecord rec;
  rec.kind = TransformKind::GammaSplit;
  rec.gamma = gamma;
  for (std::size_t d = 0; d < g.num_dispatchers(); ++d) {
    if (low[d]) rec.gamma_dispatchers.push_back(g.dispatcher_id(d));
  }
  for (std::size_t u = 0; u < g.num_servers(); ++u) {
    if (reached[u]) rec.gamma_servers.push_back(g.server_id(u));
  }

  // Simplify every edge from a high-degree dispatcher into the reached set.
  NetworkModel g0 = model;
  std::vector<std::pair<std::string, std::string>> origin = identity_mapping(g);
  for (const auto& [d, u] : g.edge_indices()) {
    if (low[d] || !reached[u]) continue;
    auto step = edge_simplify(g0, {g.dispatcher_id(d), g.server_id(u)});
    for (auto& e : step.record.removed_edges) rec.removed_edges.push_back(std::move(e));
    for (auto& e : step.record.added_edges) rec.added_edges.push_back(std::move(e));
    if (!step.record.identity) origin.emplace_back(step.record.mapping.back());
    g0 = std::move(step.model);
  }
  rec.mapping = std::move(origin);

  // Induced subnetwork on (D_gamma, S_gamma).
  std::vector<std::string> dispatchers = rec.gamma_dispatchers;
  std::vector<std::string> servers = rec.gamma_servers;
  std::vector<std::size_t> new_index(g.num_servers(), 0);
  RateSpec rates;
  for (std::size_t d = 0; d < g.num_dispatchers(); ++d) {
    if (low[d]) rates.lambda.push_back(model.lambda(d));
  }
  for (std::size_t u = 0, k = 0; u < g.num_servers(); ++u) {
    if (reached[u]) {
      new_index[u] = k++;
      rates.mu.push_back(model.mu(u));
    }
  }
  std::vector<Edge> edges;
  for (const auto& [d, u] : g.edge_indices()) {
    if (low[d]) edges.emplace_back(g.dispatcher_id(d), g.server_id(u));
  }
  DeparturePartition partition;
  for (const auto& block : model.partition().blocks) {
    std::vector<std::size_t> kept;
    for (std::size_t u : block) {
      if (reached[u]) kept.push_back(new_index[u]);
    }
    if (!kept.empty()) partition.blocks.push_back(std::move(kept));
  }
  NetworkModel sub(BipartiteGraph(std::move(dispatchers), std::move(servers), edges),
                   std::move(rates), std::move(partition));
  return {std::move(g0), std::move(sub), std::move(rec)};
}

std::vector<std::size_t> origin_indices(const TransformRecord& record, const NetworkModel& from,
                                        const NetworkModel& to) {
  std::map<std::string, std::string> m(record.mapping.begin(), record.mapping.end());
  std::vector<std::size_t> out;
  out.reserve(to.graph().num_servers());
  for (const auto& id : to.graph().servers()) {
    auto it = m.find(id);
    if (it == m.end()) throw ModelError("mapping incomplete: no origin for server " + id);
    out.push_back(from.graph().server_index(it->second));
  }
  return out;
}

std::string canonical_form(const NetworkModel& model) {
  const auto& g = model.graph();
  std::ostringstream out;
  for (std::size_t d = 0; d < g.num_dispatchers(); ++d) {
    out << g.dispatcher_id(d) << ':' << format_rate(model.lambda(d)) << ';';
  }
  std::vector<std::string> blocks;
  for (const auto& block : model.partition().blocks) {
    std::vector<std::string> members;
    for (std::size_t u : block) {
      std::vector<std::string> nbrs;
      for (std::size_t d : g.server_neighbors(u)) nbrs.push_back(g.dispatcher_id(d));
      std::sort(nbrs.begin(), nbrs.end());
      std::string sig = "(" + format_rate(model.mu(u));
      for (const auto& n : nbrs) sig += "," + n;
      members.push_back(sig + ")");
    }
    std::sort(members.begin(), members.end());
    std::string b = "{";
    for (const auto& m : members) b += m;
    blocks.push_back(b + "}");
  }
  std::sort(blocks.begin(), blocks.end());
  out << '|';
  for (const auto& b : blocks) out << b;
  return out.str();
}

}  // namespace flexnet
