#include <cmath>

#include "doctest.h"
#include "flexnet/errors.hpp"
#include "flexnet/exact.hpp"
#include "flexnet/transforms.hpp"
#include "helpers.hpp"

using namespace flexnet;
using doctest::Approx;

namespace {

double rate_between(const TruncatedChain& c, std::size_t from, std::size_t to) {
  double r = 0.0;
  for (std::size_t k = c.row_start[from]; k < c.row_start[from + 1]; ++k)
    if (c.target[k] == to) r += c.rate[k];
  return r;
}

std::size_t state(const TruncatedChain& c, std::vector<int> lengths) { return c.encode(lengths); }

void check_values(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  REQUIRE(got.size() >= want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

}  // namespace

TEST_CASE("generator structure") {
  SUBCASE("M/M/1 skeleton") {
    const auto c = build_generator(testing_models::mm1(0.5), 2);
    CHECK(c.num_states == 3);
    CHECK(rate_between(c, 0, 1) == 0.5);
    CHECK(rate_between(c, 1, 2) == 0.5);
    CHECK(rate_between(c, 1, 0) == 1.0);
    CHECK(rate_between(c, 2, 1) == 1.0);
    CHECK(rate_between(c, 0, 2) == 0.0);
    CHECK(c.exit_rate[2] == 1.0);  // arrivals dropped at the cap
  }
  SUBCASE("symmetric tie") {
    const auto c = build_generator(testing_models::simple(2, 1.0), 3);
    CHECK(c.num_states == 16);
    CHECK(rate_between(c, state(c, {1, 1}), state(c, {2, 1})) == 0.5);
    CHECK(rate_between(c, state(c, {1, 1}), state(c, {1, 2})) == 0.5);
    CHECK(rate_between(c, state(c, {2, 1}), state(c, {2, 2})) == 1.0);
    CHECK(rate_between(c, state(c, {2, 1}), state(c, {3, 1})) == 0.0);
  }
  SUBCASE("block departures") {
    const auto base = testing_models::simple(2, 0.4);
    const NetworkModel m(base.graph(), base.rates(), DeparturePartition{{{0, 1}}});
    const auto c = build_generator(m, 3);
    CHECK(rate_between(c, state(c, {2, 1}), state(c, {1, 0})) == 1.0);
    CHECK(rate_between(c, state(c, {2, 1}), state(c, {1, 1})) == 0.0);
    CHECK(rate_between(c, state(c, {2, 0}), state(c, {1, 0})) == 1.0);
  }
  SUBCASE("rows sum to zero") {
    const auto c = build_generator(testing_models::n_model(0.6, 0.9), 6);
    for (std::size_t s = 0; s < c.num_states; ++s) {
      double sum = -c.exit_rate[s];
      for (std::size_t k = c.row_start[s]; k < c.row_start[s + 1]; ++k) {
        CHECK(c.rate[k] > 0.0);
        sum += c.rate[k];
      }
      CHECK(std::abs(sum) <= 1e-12);
    }
  }
  SUBCASE("encode and decode") {
    const auto c = build_generator(testing_models::simple(3, 1.0), 4);
    CHECK(c.num_states == 125);
    for (std::size_t s = 0; s < c.num_states; ++s) CHECK(c.encode(c.decode(s)) == s);
    CHECK(state(c, {1, 0, 0}) == 1);
    CHECK(state(c, {0, 1, 0}) == 5);
  }
  ChainOptions small;
  small.max_states = 100;
  CHECK_THROWS_AS(build_generator(testing_models::simple(3, 1.0), 4, small), CapacityError);
}

TEST_CASE("M/M/1 stationary distribution") {
  for (SolverMethod method : {SolverMethod::Direct, SolverMethod::Power, SolverMethod::Auto}) {
    SolverOptions opts;
    opts.tol = 1e-10;
    opts.method = method;
    const auto sol = stationary(build_generator(testing_models::mm1(0.5), 200), opts);
    double err = 0.0;
    for (int i = 0; i <= 200; ++i) err = std::max(err, std::abs(sol.pi[i] - 0.5 * std::pow(0.5, i)));
    CHECK(err <= 1e-8);
    double sum = 0.0;
    for (double p : sol.pi) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(sum == Approx(1.0).epsilon(1e-12));
    const auto occ = occupancy_exact(sol);
    for (int i = 0; i <= 50; ++i) CHECK(std::abs(occ.curve.values[i] - std::pow(0.5, i)) <= 1e-8);
  }
}

TEST_CASE("refuses chains that are not ergodic") {
  CHECK_THROWS_AS(stationary(build_generator(testing_models::mm1(1.0), 10)), StabilityError);
  SolverOptions opts;
  opts.require_ergodic = false;
  CHECK_NOTHROW(stationary(build_generator(testing_models::mm1(1.0), 10), opts));
}

TEST_CASE("independent oracle values") {
  // Reference values from a dense solve of the same truncated chains.
  SUBCASE("simple 2-server, rho 1.5") {
    const auto r = solve_to_target(testing_models::simple(2, 1.5));
    check_values(r.occupancy.curve.values,
                 {1, 0.750000000000001, 0.467980929826615, 0.269572829731722, 0.152369825133899,
                  0.0857906114696313},
                 1e-9);
  }
  SUBCASE("N model") {
    const auto r = solve_to_target(testing_models::n_model(0.6, 0.9));
    check_values(r.occupancy.server_tails[0],
                 {1, 0.843496883048433, 0.650462753032659, 0.472942428399818, 0.330883240923429,
                  0.22532729754143},
                 1e-9);
    check_values(r.occupancy.server_tails[1],
                 {1, 0.656503116951567, 0.389076467619559, 0.223035925844175, 0.126842160578047,
                  0.0719322439086218},
                 1e-9);
    check_values(r.occupancy.curve.values,
                 {1, 0.75, 0.519769610326109, 0.347989177121996, 0.228862700750738,
                  0.148629770725026},
                 1e-9);
  }
  SUBCASE("one departure block") {
    const auto base = testing_models::simple(2, 0.5);
    const NetworkModel m(base.graph(), base.rates(), DeparturePartition{{{0, 1}}});
    const auto r = solve_to_target(m);
    check_values(r.occupancy.server_tails[0],
                 {1, 0.25, 0.0334936490538904, 0.00448729810778074, 0.000601183952088922,
                  8.05433772325456e-05},
                 1e-10);
  }
}

TEST_CASE("symmetry and truncation") {
  const auto m = testing_models::simple(2, 1.2);
  const auto r = solve_at_cap(m, 30);
  const auto& c = build_generator(m, 30);
  for (std::size_t s = 0; s < c.num_states; ++s) {
    const auto x = c.decode(s);
    CHECK(std::abs(r.solution.pi[s] - r.solution.pi[c.encode(std::vector<int>{x[1], x[0]})]) <= 1e-12);
  }
  for (int i = 0; i <= 30; ++i)
    CHECK(std::abs(r.occupancy.server_tails[0][i] - r.occupancy.server_tails[1][i]) <= 1e-12);

  const auto wide = solve_at_cap(m, 60);
  CHECK(wide.solution.boundary_mass < r.solution.boundary_mass);
  CHECK(r.solution.truncation_slack >= r.solution.boundary_mass);
  CHECK(r.solution.residual <= 1e-10);
}

TEST_CASE("occupancy curve properties") {
  const auto r = solve_to_target(testing_models::n_model(0.6, 0.9));
  const auto& v = r.occupancy.curve.values;
  CHECK(v[0] == 1.0);
  for (std::size_t i = 1; i < v.size(); ++i) {
    CHECK(v[i] <= v[i - 1]);
    CHECK(v[i] >= 0.0);
  }
  CHECK(r.occupancy.curve.satisfies_invariants());
  double total = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) total += v[i];
  CHECK(std::abs(2.0 * total - r.occupancy.mean_total_tasks) <= 1e-10);
  CHECK(r.solution.boundary_mass <= 1e-10);
}

TEST_CASE("nearly empty system") {
  const auto r = solve_at_cap(testing_models::mm1(1e-6), 4);
  CHECK(r.occupancy.curve.values[1] == Approx(1e-6).epsilon(1e-6));
}

TEST_CASE("direct and power solutions agree") {
  const NetworkModel m(testing_models::small_graph(), RateSpec{{0.5, 0.8}, {1.0, 0.7}});
  SolverOptions direct, power;
  direct.method = SolverMethod::Direct;
  power.method = SolverMethod::Power;
  const auto a = solve_at_cap(m, 25, direct);
  const auto b = solve_at_cap(m, 25, power);
  CHECK(a.solution.method == SolverMethod::Direct);
  CHECK(b.solution.method == SolverMethod::Power);
  for (std::size_t s = 0; s < a.solution.pi.size(); ++s)
    CHECK(std::abs(a.solution.pi[s] - b.solution.pi[s]) <= b.solution.tol + 1e-12);
}

TEST_CASE("tail_compare") {
  SUBCASE("identity") {
    const auto r = solve_to_target(testing_models::n_model(0.6, 0.9));
    const std::vector<std::size_t> map{0, 1};
    const auto t = tail_compare(r.occupancy, r.occupancy, map, 10);
    CHECK(t.ok());
    CHECK(t.worst_margin == 0.0);
    CHECK(t.comparisons == 22);
  }
  SUBCASE("arrival decrease on M/M/1") {
    const auto a = solve_to_target(testing_models::mm1(0.5));
    const auto b = solve_to_target(testing_models::mm1(0.4));
    const std::vector<std::size_t> map{0};
    const auto t = tail_compare(a.occupancy, b.occupancy, map, 10);
    CHECK(t.ok());
    CHECK(t.worst_margin == Approx(0.0).epsilon(1e-12));
    const auto reverse = tail_compare(b.occupancy, a.occupancy, map, 10);
    CHECK_FALSE(reverse.ok());
    CHECK(reverse.worst_margin == Approx(-0.1).epsilon(1e-9));
  }
  SUBCASE("edge simplification of a shared server") {
    const NetworkModel m(BipartiteGraph({"d", "e"}, {"u"}, {{"d", "u"}, {"e", "u"}}),
                         RateSpec{{0.3, 0.4}, {1.0}});
    const auto t = edge_simplify(m, {"d", "u"});
    const auto a = solve_to_target(m);
    const auto b = solve_to_target(t.model);
    for (int i = 0; i <= 5; ++i) {
      CHECK(a.occupancy.server_tails[0][i] == Approx(std::pow(0.7, i)).epsilon(1e-9));
      CHECK(b.occupancy.server_tails[0][i] == Approx(std::pow(0.4, i)).epsilon(1e-9));
      CHECK(b.occupancy.server_tails[1][i] == Approx(std::pow(0.3, i)).epsilon(1e-9));
    }
    check_values(b.occupancy.curve.values, {1, 0.35, 0.125, 0.0455, 0.01685, 0.006335}, 1e-10);
    const auto map = origin_indices(t.record, m, t.model);
    const auto cmp = tail_compare(a.occupancy, b.occupancy, map, 10);
    CHECK(cmp.ok());
    CHECK(cmp.comparisons == 22);
  }
  SUBCASE("incomplete mapping") {
    const auto r = solve_to_target(testing_models::n_model(0.6, 0.9));
    const std::vector<std::size_t> map{0};
    CHECK_THROWS(tail_compare(r.occupancy, r.occupancy, map, 10));
  }
}

TEST_CASE("auto cap") {
  const auto r = solve_to_target(testing_models::simple(3, 2.4));
  CHECK(r.solution.boundary_mass <= 1e-10);
  AutoCapOptions tight;
  tight.max_states = 1000;
  CHECK_THROWS_AS(solve_to_target(testing_models::simple(3, 2.7), tight), CapacityError);
}
