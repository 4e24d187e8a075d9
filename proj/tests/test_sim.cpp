#include <cmath>

#include "doctest.h"
#include "flexnet/errors.hpp"
#include "flexnet/exact.hpp"
#include "flexnet/sim.hpp"
#include "helpers.hpp"

using namespace flexnet;

namespace {

SimConfig config(double horizon, std::uint64_t seed = 1) {
  SimConfig c;
  c.horizon = horizon;
  c.seed = seed;
  c.i_max = 10;
  return c;
}

bool same(const SimResult& a, const SimResult& b) {
  return a.occupancy.values == b.occupancy.values && a.occupancy.half_widths == b.occupancy.half_widths &&
         a.events == b.events && a.mean_total_tasks == b.mean_total_tasks &&
         a.batch_occupancy == b.batch_occupancy && a.mean_sojourn == b.mean_sojourn;
}

}  // namespace

TEST_CASE("config validation") {
  SimConfig c;
  c.horizon = 0.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = SimConfig{};
  c.burn_in = 1.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = SimConfig{};
  c.batches = 1;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = SimConfig{};
  c.i_max = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  CHECK_NOTHROW(SimConfig{}.validate());
}

TEST_CASE("M/M/1 estimates") {
  const auto r = simulate(testing_models::mm1(0.5), config(1e6));
  CHECK_FALSE(r.aborted_unstable);
  CHECK(r.occupancy.values[0] == 1.0);
  CHECK(std::abs(r.occupancy.values[1] - 0.5) <= r.occupancy.half_widths[1]);
  CHECK(r.occupancy.half_widths[1] < 0.01);
  CHECK(r.occupancy.satisfies_invariants());

  const auto little = little_check(r, testing_models::mm1(0.5));
  CHECK(little.identity_ok);
  CHECK(little.little_ok);
  CHECK(std::abs(r.mean_total_tasks - 1.0) <= r.total_tasks_half_width);
  CHECK(std::abs(r.mean_sojourn - 2.0) <= r.sojourn_half_width);
}

TEST_CASE("two servers against the exact solution") {
  const auto m = testing_models::simple(2, 1.5);
  const auto exact = solve_to_target(m);
  const auto r = estimate_occupancy(m, config(2e5, 11), 4);
  for (int i = 1; i <= 8; ++i) {
    CHECK(std::abs(r.occupancy.values[i] - exact.occupancy.curve.values[i]) <=
          r.occupancy.half_widths[i]);
  }
  // Per-server symmetry.
  CHECK(std::abs(r.server_mean_length[0] - r.server_mean_length[1]) <=
        r.server_length_half_width[0] + r.server_length_half_width[1]);
  CHECK(little_check(r, m).identity_ok);
}

TEST_CASE("unstable model aborts") {
  SimConfig c = config(1e6);
  c.divergence_guard = 500;
  const auto r = simulate(testing_models::n_model(0.6, 0.6, 0.5, 0.5), c);
  CHECK(r.aborted_unstable);
  CHECK(r.abort_total_tasks > 500);
  CHECK(r.growth_rate > 0.0);
  CHECK_THROWS_AS(little_check(r, testing_models::n_model(0.6, 0.6, 0.5, 0.5)), DomainError);
}

TEST_CASE("replications") {
  const auto m = testing_models::mm1(0.5);
  const SimConfig c = config(5e4, 3);
  CHECK(same(estimate_occupancy(m, c, 1), simulate(m, c)));
  CHECK(same(simulate(m, c), simulate(m, c)));
  CHECK(same(estimate_occupancy(m, c, 4, 1), estimate_occupancy(m, c, 4, 4)));
  CHECK(replication_seed(3, 0) == 3);
  CHECK(replication_seed(3, 1) != replication_seed(3, 2));

  const auto one = estimate_occupancy(m, c, 1);
  const auto sixteen = estimate_occupancy(m, c, 16);
  CHECK(sixteen.replications == 16);
  CHECK(sixteen.batch_occupancy.size() == 16 * 20);
  // Expected ratio about 1/4, a bit less from the smaller t quantile.
  const double ratio = sixteen.occupancy.half_widths[1] / one.occupancy.half_widths[1];
  CHECK(ratio > 0.12);
  CHECK(ratio < 0.4);
}

TEST_CASE("coupled simple system dominates the fast queue") {
  const auto one = coupled_prop1_run(1, 0.7, 1e9, 5, 200000);
  CHECK(one.violations == 0);
  CHECK(one.equalities == one.events);
  CHECK(one.final_total == one.final_fast);

  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto r = coupled_prop1_run(2, 1.5, 1e9, seed, 200000);
    CHECK(r.events == 200000);
    CHECK(r.violations == 0);
    CHECK(r.equalities > 0);
    CHECK(r.final_total >= r.final_fast);
  }
  const auto short_run = coupled_prop1_run(3, 2.0, 1e-12, 1, 1000);
  CHECK(short_run.violations == 0);
}
