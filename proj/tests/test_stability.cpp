#include <random>

#include "doctest.h"
#include "flexnet/errors.hpp"
#include "flexnet/stability.hpp"
#include "helpers.hpp"

using namespace flexnet;

TEST_CASE("worked verdicts") {
  const StabilityVerdict simple = check_ergodic(testing_models::simple(2, 1.5));
  CHECK(simple.status == Ergodicity::Ergodic);
  CHECK_FALSE(simple.witness.has_value());
  CHECK(simple.margin == doctest::Approx(0.5));

  const StabilityVerdict over = check_ergodic(testing_models::n_model(0.6, 0.6, 0.5, 0.5));
  CHECK(over.status == Ergodicity::NotErgodic);
  REQUIRE(over.witness.has_value());
  CHECK(*over.witness == std::vector<std::size_t>{0});
  CHECK(over.margin == doctest::Approx(-0.2));
  CHECK(over.tightest == std::vector<std::size_t>{0, 1});

  const StabilityVerdict edge = check_ergodic(testing_models::mm1(1.0));
  CHECK(edge.status == Ergodicity::Boundary);
  REQUIRE(edge.witness.has_value());
  CHECK(*edge.witness == std::vector<std::size_t>{0});
  CHECK(edge.margin == 0.0);
  CHECK(edge.exact_arithmetic);
}

TEST_CASE("decimal rates compare exactly") {
  // 0.1 + 0.2 != 0.3 in binary; the scaled integers agree.
  const NetworkModel m(BipartiteGraph({"a", "b"}, {"u"}, {{"a", "u"}, {"b", "u"}}),
                       RateSpec{{0.1, 0.2}, {0.3}});
  const StabilityVerdict v = check_ergodic(m);
  CHECK(v.status == Ergodicity::Boundary);
  CHECK(v.exact_arithmetic);
}

TEST_CASE("simple models: ergodic iff rho < |S|") {
  for (int s = 1; s <= 6; ++s) {
    for (int k = 1; k <= 40; ++k) {
      const double rho = 0.25 * k;
      const StabilityVerdict v = check_ergodic(testing_models::simple(s, rho));
      if (rho < s) {
        CHECK(v.status == Ergodicity::Ergodic);
      } else if (rho == s) {
        CHECK(v.status == Ergodicity::Boundary);
      } else {
        CHECK(v.status == Ergodicity::NotErgodic);
      }
    }
  }
}

TEST_CASE("size cap") {
  StabilityOptions opts;
  opts.max_servers = 3;
  CHECK_THROWS_AS(check_ergodic(testing_models::simple(4, 1.0), opts), CapacityError);
  CHECK_NOTHROW(check_ergodic(testing_models::simple(3, 1.0), opts));
}

TEST_CASE("relabeling and monotone perturbations") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> rate(0.2, 2.0);
  std::bernoulli_distribution coin(0.5);
  int checked = 0;
  while (checked < 300) {
    const int nd = 1 + static_cast<int>(rng() % 4), ns = 1 + static_cast<int>(rng() % 4);
    std::vector<std::string> ds, ss;
    for (int d = 0; d < nd; ++d) ds.push_back("d" + std::to_string(d));
    for (int u = 0; u < ns; ++u) ss.push_back("u" + std::to_string(u));
    std::vector<std::pair<int, int>> idx;
    for (int d = 0; d < nd; ++d)
      for (int u = 0; u < ns; ++u)
        if (coin(rng)) idx.emplace_back(d, u);
    std::vector<int> dd(nd, 0), sd(ns, 0);
    for (auto [d, u] : idx) ++dd[d], ++sd[u];
    if (std::count(dd.begin(), dd.end(), 0) || std::count(sd.begin(), sd.end(), 0)) continue;
    RateSpec rates;
    for (int d = 0; d < nd; ++d) rates.lambda.push_back(rate(rng));
    for (int u = 0; u < ns; ++u) rates.mu.push_back(rate(rng));

    std::vector<Edge> edges;
    for (auto [d, u] : idx) edges.emplace_back(ds[d], ss[u]);
    const NetworkModel m(BipartiteGraph(ds, ss, edges), rates);
    const StabilityVerdict v = check_ergodic(m);

    // Reverse both orders.
    std::vector<std::string> rds(ds.rbegin(), ds.rend()), rss(ss.rbegin(), ss.rend());
    RateSpec rr{{rates.lambda.rbegin(), rates.lambda.rend()}, {rates.mu.rbegin(), rates.mu.rend()}};
    const NetworkModel r(BipartiteGraph(rds, rss, edges), rr);
    const StabilityVerdict w = check_ergodic(r);
    CHECK(v.status == w.status);
    CHECK(v.margin == doctest::Approx(w.margin));

    if (v.status == Ergodicity::Ergodic) {
      RateSpec lower = rates;
      lower.lambda[rng() % nd] *= 0.5;
      CHECK(check_ergodic(NetworkModel(m.graph(), lower)).status == Ergodicity::Ergodic);
      RateSpec faster = rates;
      faster.mu[rng() % ns] *= 1.7;
      CHECK(check_ergodic(NetworkModel(m.graph(), faster)).status == Ergodicity::Ergodic);
    }
    ++checked;
  }
}

TEST_CASE("critical arrival scale") {
  CHECK(critical_arrival_scale(family_g1(5)) == doctest::Approx(0.5));
  CHECK(critical_arrival_scale(family_g2(5)) == doctest::Approx(1.0));
  CHECK(critical_arrival_scale(testing_models::simple(3, 1.0)) == doctest::Approx(3.0));
}

TEST_CASE("cut-based check agrees with enumeration") {
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution coin(0.45);
  std::uniform_int_distribution<int> tenths(1, 20);
  std::uniform_real_distribution<double> real(0.1, 2.0);
  int checked = 0;
  while (checked < 400) {
    const int nd = 1 + static_cast<int>(rng() % 5), ns = 1 + static_cast<int>(rng() % 6);
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
    // Short decimals half the time so both arithmetic paths are covered.
    const bool decimal = checked % 2 == 0;
    RateSpec rates;
    for (int d = 0; d < nd; ++d) rates.lambda.push_back(decimal ? 0.1 * tenths(rng) : real(rng));
    for (int u = 0; u < ns; ++u) rates.mu.push_back(decimal ? 0.1 * tenths(rng) : real(rng));
    const NetworkModel m(BipartiteGraph(ds, ss, edges), rates);
    const StabilityVerdict a = check_ergodic(m);
    const StabilityVerdict b = check_ergodic_by_cut(m);
    CHECK(a.status == b.status);
    CHECK(a.margin == doctest::Approx(b.margin).epsilon(1e-12));
    CHECK(a.exact_arithmetic == b.exact_arithmetic);
    StabilityOptions small;
    small.max_servers = 0;
    CHECK(critical_arrival_scale(m) == doctest::Approx(critical_arrival_scale(m, small)).epsilon(1e-12));
    ++checked;
  }
}

TEST_CASE("large family members") {
  const StabilityVerdict v = classify_ergodicity(family_g1(20));
  CHECK(v.status == Ergodicity::NotErgodic);
  CHECK(critical_arrival_scale(family_g1(20)) == doctest::Approx(0.5));
  CHECK(critical_arrival_scale(family_g2(20)) == doctest::Approx(1.0));
  CHECK(classify_ergodicity(with_uniform_rates(family_g1(20), 0.4, 1.0)).status == Ergodicity::Ergodic);
  CHECK(classify_ergodicity(with_uniform_rates(family_g1(20), 0.5, 1.0)).status == Ergodicity::Boundary);
  CHECK(classify_ergodicity(with_uniform_rates(family_g2(20), 0.9, 1.0)).status == Ergodicity::Ergodic);
}
