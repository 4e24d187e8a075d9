#include "flexnet/metrics.hpp"

#include <algorithm>

#include "flexnet/errors.hpp"

namespace flexnet {

namespace {

std::int64_t min_neighbor_degree(const BipartiteGraph& graph, std::size_t u) {
  std::size_t best = graph.num_servers();
  for (std::size_t d : graph.server_neighbors(u)) best = std::min(best, graph.dispatcher_degree(d));
  return static_cast<std::int64_t>(best);
}

}  // namespace

Rational WeightFunction::at(std::size_t d, std::size_t u) const {
  auto it = weights.find({d, u});
  return it == weights.end() ? Rational(0) : it->second;
}

Rational alpha(const BipartiteGraph& graph) {
  std::int64_t total = 0;
  for (std::size_t u = 0; u < graph.num_servers(); ++u) total += min_neighbor_degree(graph, u);
  return Rational(total, static_cast<std::int64_t>(graph.num_servers()));
}

Rational beta(const BipartiteGraph& graph) {
  return Rational(static_cast<std::int64_t>(graph.num_edges()),
                  static_cast<std::int64_t>(graph.num_dispatchers()));
}

void validate_weights(const BipartiteGraph& graph, const WeightFunction& theta) {
  std::vector<Rational> sums(graph.num_servers(), Rational(0));
  for (const auto& [key, w] : theta.weights) {
    const auto [d, u] = key;
    if (d >= graph.num_dispatchers() || u >= graph.num_servers()) {
      throw ModelError("weight references unknown node");
    }
    if (w < Rational(0) || w > Rational(1)) {
      throw ModelError("weight outside [0,1] on (" + graph.dispatcher_id(d) + "," +
                       graph.server_id(u) + ")");
    }
    if (w != Rational(0) && !graph.has_edge(d, u)) {
      throw ModelError("nonzero weight on non-edge (" + graph.dispatcher_id(d) + "," +
                       graph.server_id(u) + ")");
    }
    sums[u] += w;
  }
  for (std::size_t u = 0; u < graph.num_servers(); ++u) {
    if (sums[u] != Rational(1)) throw ModelError("weights of server " + graph.server_id(u) + " do not sum to one");
  }
}

Rational theta_metric(const BipartiteGraph& graph, const WeightFunction& theta) {
  validate_weights(graph, theta);
  Rational total(0);
  for (const auto& [key, w] : theta.weights) {
    total += w * static_cast<std::int64_t>(graph.dispatcher_degree(key.first));
  }
  return total / static_cast<std::int64_t>(graph.num_servers());
}

WeightFunction min_weight(const BipartiteGraph& graph) {
  WeightFunction theta;
  for (std::size_t u = 0; u < graph.num_servers(); ++u) {
    const auto min_deg = static_cast<std::size_t>(min_neighbor_degree(graph, u));
    std::vector<std::size_t> ties;
    for (std::size_t d : graph.server_neighbors(u)) {
      if (graph.dispatcher_degree(d) == min_deg) ties.push_back(d);
    }
    const Rational share(1, static_cast<std::int64_t>(ties.size()));
    for (std::size_t d : ties) theta.weights[{d, u}] = share;
  }
  return theta;
}

}  // namespace flexnet
