#include <random>

#include "doctest.h"
#include "flexnet/errors.hpp"
#include "flexnet/metrics.hpp"
#include "helpers.hpp"

using namespace flexnet;

namespace {

BipartiteGraph complete(int nd, int ns) {
  std::vector<std::string> ds, ss;
  std::vector<Edge> edges;
  for (int d = 0; d < nd; ++d) ds.push_back("d" + std::to_string(d));
  for (int u = 0; u < ns; ++u) ss.push_back("u" + std::to_string(u));
  for (const auto& d : ds)
    for (const auto& u : ss) edges.emplace_back(d, u);
  return BipartiteGraph(ds, ss, edges);
}

BipartiteGraph random_graph(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 6);
  std::bernoulli_distribution coin(0.4);
  while (true) {
    const int nd = size(rng), ns = size(rng);
    std::vector<std::string> ds, ss;
    for (int d = 0; d < nd; ++d) ds.push_back("d" + std::to_string(d));
    for (int u = 0; u < ns; ++u) ss.push_back("u" + std::to_string(u));
    std::vector<Edge> edges;
    std::vector<int> dd(nd, 0), sd(ns, 0);
    for (int d = 0; d < nd; ++d)
      for (int u = 0; u < ns; ++u)
        if (coin(rng)) {
          edges.emplace_back(ds[d], ss[u]);
          ++dd[d];
          ++sd[u];
        }
    if (std::count(dd.begin(), dd.end(), 0) || std::count(sd.begin(), sd.end(), 0)) continue;
    return BipartiteGraph(ds, ss, edges);
  }
}

}  // namespace

TEST_CASE("alpha and beta on hand examples") {
  for (int k = 1; k <= 6; ++k) {
    CHECK(alpha(complete(1, k)) == Rational(k));
    CHECK(beta(complete(1, k)) == Rational(k));
  }
  CHECK(alpha(family_g2(3).graph()) == Rational(2));
  CHECK(beta(family_g1(3).graph()) == Rational(2));
  const auto g = testing_models::small_graph();
  CHECK(alpha(g) == Rational(3, 2));
  CHECK(beta(g) == Rational(3, 2));
}

TEST_CASE("family closed forms") {
  CHECK(alpha(family_g1(1).graph()) == Rational(1));
  CHECK(beta(family_g1(1).graph()) == Rational(1));
  CHECK(beta(family_g1(20).graph()) == Rational(21, 2));
  CHECK(alpha(family_g2(2).graph()) == Rational(3, 2));
  CHECK(beta(family_g2(2).graph()) == Rational(4, 3));
  CHECK(alpha(family_g2(1).graph()) == Rational(1));
  CHECK(beta(family_g2(1).graph()) == Rational(1));
  CHECK(alpha(family_g2(10).graph()) == Rational(11, 2));
  CHECK(beta(family_g2(10).graph()) == Rational(20, 11));
  for (int n = 1; n <= 50; ++n) {
    CHECK(alpha(family_g1(n).graph()) == Rational(1));
    CHECK(beta(family_g1(n).graph()) == Rational(n + 1, 2));
    CHECK(alpha(family_g2(n).graph()) == Rational(n + 1, 2));
    CHECK(beta(family_g2(n).graph()) == Rational(2 * n, n + 1));
  }
}

TEST_CASE("theta on hand examples") {
  const auto g = testing_models::small_graph();
  WeightFunction w;
  w.weights[{0, 0}] = Rational(1, 2);
  w.weights[{1, 0}] = Rational(1, 2);
  w.weights[{1, 1}] = Rational(1);
  CHECK(theta_metric(g, w) == Rational(7, 4));

  const WeightFunction m = min_weight(g);
  CHECK(m.at(0, 0) == Rational(1));
  CHECK(m.at(1, 0) == Rational(0));
  CHECK(m.at(1, 1) == Rational(1));
  CHECK(theta_metric(g, m) == alpha(g));

  WeightFunction uniform;
  for (std::size_t u = 0; u < 4; ++u) uniform.weights[{0, u}] = Rational(1);
  CHECK(theta_metric(complete(1, 4), uniform) == Rational(4));

  // Tied minimum degrees split evenly.
  const BipartiteGraph tie({"d", "e"}, {"u"}, {{"d", "u"}, {"e", "u"}});
  const WeightFunction t = min_weight(tie);
  CHECK(t.at(0, 0) == Rational(1, 2));
  CHECK(t.at(1, 0) == Rational(1, 2));

  // Each server has a single dispatcher: forced weights.
  const WeightFunction f = min_weight(family_g2(3).graph());
  for (const auto& [key, value] : f.weights) CHECK(value == Rational(1));
}

TEST_CASE("invalid weights are rejected") {
  const auto g = testing_models::small_graph();
  WeightFunction off_edge;
  off_edge.weights[{0, 1}] = Rational(1);
  off_edge.weights[{0, 0}] = Rational(1);
  CHECK_THROWS_AS(theta_metric(g, off_edge), ModelError);
  WeightFunction short_sum;
  short_sum.weights[{0, 0}] = Rational(1, 3);
  short_sum.weights[{1, 1}] = Rational(1);
  CHECK_THROWS_AS(theta_metric(g, short_sum), ModelError);
  WeightFunction negative;
  negative.weights[{0, 0}] = Rational(-1);
  negative.weights[{1, 0}] = Rational(2);
  negative.weights[{1, 1}] = Rational(1);
  CHECK_THROWS_AS(theta_metric(g, negative), ModelError);
}

TEST_CASE("random graphs: metric ranges and theta >= alpha") {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> part(0, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    const BipartiteGraph g = random_graph(rng);
    const Rational a = alpha(g), b = beta(g);
    std::size_t max_deg = 0;
    for (std::size_t d = 0; d < g.num_dispatchers(); ++d) max_deg = std::max(max_deg, g.dispatcher_degree(d));
    CHECK(a >= Rational(1));
    CHECK(a <= Rational(static_cast<std::int64_t>(max_deg)));
    CHECK(b >= Rational(1));
    CHECK(b <= Rational(static_cast<std::int64_t>(g.num_servers())));

    // Random rational convex weights per server.
    WeightFunction w;
    for (std::size_t u = 0; u < g.num_servers(); ++u) {
      const auto& nbrs = g.server_neighbors(u);
      std::vector<std::int64_t> raw;
      std::int64_t total = 0;
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        raw.push_back(part(rng));
        total += raw.back();
      }
      if (total == 0) {
        raw[0] = 1;
        total = 1;
      }
      for (std::size_t k = 0; k < nbrs.size(); ++k) w.weights[{nbrs[k], u}] = Rational(raw[k], total);
    }
    CHECK(theta_metric(g, w) >= a);
    CHECK(theta_metric(g, min_weight(g)) == a);
  }
}
