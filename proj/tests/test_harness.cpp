#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flexnet/bounds.hpp"
#include "flexnet/harness.hpp"
#include "flexnet/metrics.hpp"
#include "helpers.hpp"

using namespace flexnet;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("tables") {
  Table t;
  t.add_column("i");
  t.add_column("name", false);
  t.add_row({"1", "a"});
  t.add_row({"inf", "b"});
  CHECK(t.to_csv() == "# flexnet-csv v1\ni,name\n1,a\ninf,b\n");
  const auto j = t.to_json();
  CHECK(j[0]["i"] == 1.0);
  CHECK(j[0]["name"] == "a");
  CHECK(j[1]["i"] == "inf");
  CHECK_THROWS(t.add_row({"1"}));
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(std::nan("")) == "nan");

  const auto dir = std::filesystem::temp_directory_path() / "flexnet_harness_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  write_atomic(path, "first");
  write_atomic(path, "second");
  CHECK(slurp(path) == "second");
  CHECK_FALSE(std::filesystem::exists(dir / "out.csv.tmp"));
  CHECK_THROWS(write_atomic(dir / "missing" / "x.csv", "text"));
  CHECK_FALSE(std::filesystem::exists(dir / "missing"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("load scaling") {
  const auto g1 = scaled_family("g1", 4, 0.8);
  for (double l : g1.rates().lambda) CHECK(l == doctest::Approx(0.4));
  for (double m : g1.rates().mu) CHECK(m == 1.0);
  const auto g2 = scaled_family("g2", 4, 0.5);
  for (double l : g2.rates().lambda) CHECK(l == doctest::Approx(0.5));
  CHECK(check_ergodic(scaled_family("g1", 7, 0.99)).status == Ergodicity::Ergodic);
  CHECK_THROWS_AS(scaled_family("g3", 2, 0.5), ModelError);
  CHECK_THROWS_AS(scaled_family("g1", 2, 1.0), DomainError);
  CHECK(parse_method("exact") == Method::Exact);
  CHECK_THROWS_AS(parse_method("guess"), ModelError);
}

TEST_CASE("verification of a simple model") {
  ExperimentSpec spec;
  spec.bounds = {"prop1", "thm1", "thm2", "thm3"};
  const auto v = run_verification(testing_models::simple(2, 1.5), spec);
  CHECK(v.verdict.status == Ergodicity::Ergodic);
  CHECK(v.valid_from == 0);
  CHECK(v.rows.size() == 11);
  CHECK(v.pass());
  for (const auto& r : v.rows) {
    for (const auto& b : r.bounds) {
      // pass flags are recomputable from the row
      CHECK(b.pass == (!b.asserted || r.estimate + r.half_width + r.slack >= b.value));
      if (b.name != "prop1") CHECK(b.asserted == (r.i >= 1));
    }
  }
  const Table t = v.table();
  CHECK(t.columns.size() == 5 + 3 * 4);
  CHECK(t.rows.size() == 11);
  CHECK(t.rows[0][5 + 2] == "1");
  CHECK(t.rows[0][5 + 5] == "");

  ExperimentSpec bad = spec;
  bad.bounds = {"thm9"};
  CHECK_THROWS_AS(run_verification(testing_models::simple(2, 1.5), bad), ModelError);
  CHECK_THROWS_AS(run_verification(testing_models::n_model(0.1, 0.1), spec), ModelError);
}

TEST_CASE("simulated verification of a family member") {
  ExperimentSpec spec;
  spec.source.family = "g1";
  spec.source.n = 5;
  spec.source.load = 0.8;
  spec.method = Method::Simulate;
  spec.bounds = {"thm3"};
  spec.sim.horizon = 2e4;
  spec.sim.seed = 5;
  const auto v = run_verification(spec);
  CHECK(v.pass());
  CHECK(v.occupancy.sim.has_value());
  CHECK(v.rows.front().i == validity_threshold(v.rho0));
}

TEST_CASE("verification rejects a model that is not ergodic") {
  ExperimentSpec spec;
  try {
    run_verification(testing_models::n_model(0.6, 0.6, 0.5, 0.5), spec);
    FAIL("expected a rejection");
  } catch (const StabilityRejection& e) {
    REQUIRE(e.verdict.witness.has_value());
    CHECK(*e.verdict.witness == std::vector<std::size_t>{0});
    CHECK(std::string(e.what()).find("{u1}") != std::string::npos);
  }
  CHECK_THROWS_AS(run_verification(testing_models::mm1(1.0), spec), StabilityRejection);
}

TEST_CASE("family sweeps") {
  for (const std::string family : {"g1", "g2"}) {
    SweepSpec spec;
    spec.family = family;
    spec.n_max = 20;
    spec.i_max = 3;
    spec.sim.horizon = 2e3;
    bool ok = false;
    const Table t = run_family_sweep(spec, &ok);
    CHECK(t.rows.size() == 20 * 4);
    for (const auto& row : t.rows) {
      const int n = std::stoi(row[0]);
      const Rational a = family == "g1" ? Rational(1) : Rational(n + 1, 2);
      const Rational b = family == "g1" ? Rational(n + 1, 2) : Rational(2 * n, n + 1);
      std::string as = std::to_string(a.numerator()), bs = std::to_string(b.numerator());
      if (a.denominator() != 1) as += "/" + std::to_string(a.denominator());
      if (b.denominator() != 1) bs += "/" + std::to_string(b.denominator());
      CHECK(row[2] == as);
      CHECK(row[3] == bs);
      const bool asserted = row[15] == "1";
      const double lhs = std::stod(row[8]) + std::stod(row[9]) + std::stod(row[10]);
      CHECK((row[16] == "1") == (!asserted || lhs >= std::stod(row[13])));
    }
    CHECK(t.rows.front()[4] == (family == "g1" ? "1" : "inf"));
  }
  SweepSpec same;
  same.n_max = 3;
  same.sim.horizon = 1e3;
  CHECK(run_family_sweep(same).to_csv() == run_family_sweep(same).to_csv());
  SweepSpec bad;
  bad.family = "g7";
  CHECK_THROWS_AS(run_family_sweep(bad), ModelError);
}

TEST_CASE("sampler") {
  SamplerOptions opts;
  std::mt19937_64 a(3), b(3);
  for (int k = 0; k < 20; ++k) {
    const auto x = sample_model(a, opts);
    const auto y = sample_model(b, opts);
    CHECK(x.model == y.model);
    CHECK(x.model.graph().num_servers() <= 3);
    CHECK(x.model.graph().num_dispatchers() <= 3);
    const auto v = check_ergodic(x.model);
    CHECK(v.status == Ergodicity::Ergodic);
    CHECK(v.margin >= 0.05);
    for (double l : x.model.rates().lambda) {
      CHECK(l >= 0.2);
      CHECK(l <= 2.0);
    }
  }
}

TEST_CASE("small monotonicity battery") {
  MonotonicityOptions opts;
  opts.count = 4;
  opts.seed = 9;
  const auto r = run_monotonicity_battery(opts);
  CHECK(r.ok());
  CHECK(r.kinds.size() == 3);
  for (const auto& k : r.kinds) {
    CHECK(k.compared == 4);
    CHECK(k.errors == 0);
    CHECK(k.violations == 0);
  }
  CHECK(r.table().rows.size() == r.entries.size());
}
