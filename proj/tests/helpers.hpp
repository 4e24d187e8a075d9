#pragma once

#include <string>
#include <vector>

#include "flexnet/model.hpp"

namespace testing_models {

using flexnet::BipartiteGraph;
using flexnet::DeparturePartition;
using flexnet::NetworkModel;
using flexnet::RateSpec;

// One dispatcher with rate lambda over s servers of rate mu.
inline NetworkModel simple(int s, double lambda, double mu = 1.0) {
  std::vector<std::string> servers;
  std::vector<flexnet::Edge> edges;
  for (int u = 1; u <= s; ++u) {
    servers.push_back("u" + std::to_string(u));
    edges.emplace_back("d1", servers.back());
  }
  return NetworkModel(BipartiteGraph({"d1"}, servers, edges),
                      RateSpec{{lambda}, std::vector<double>(static_cast<std::size_t>(s), mu)});
}

inline NetworkModel mm1(double lambda, double mu = 1.0) { return simple(1, lambda, mu); }

// d1 -> u1, d2 -> {u1, u2}
inline NetworkModel n_model(double l1, double l2, double mu1 = 1.0, double mu2 = 1.0) {
  return NetworkModel(BipartiteGraph({"d1", "d2"}, {"u1", "u2"},
                                     {{"d1", "u1"}, {"d2", "u1"}, {"d2", "u2"}}),
                      RateSpec{{l1, l2}, {mu1, mu2}});
}

// D = {d, e}, S = {u, w}, E = {(d,u), (e,u), (e,w)}
inline BipartiteGraph small_graph() {
  return BipartiteGraph({"d", "e"}, {"u", "w"}, {{"d", "u"}, {"e", "u"}, {"e", "w"}});
}

}  // namespace testing_models
