#include "flexnet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "flexnet/bounds.hpp"
#include "flexnet/errors.hpp"
#include "flexnet/metrics.hpp"
#include "flexnet/model_io.hpp"

namespace flexnet {

namespace {

std::string rational_text(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + std::min(hi - lo, static_cast<int>(unit(rng) * (hi - lo + 1)));
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo)));
}

bool known_bound(const std::string& name) {
  return name == "prop1" || name == "thm1" || name == "thm2" || name == "thm3";
}

}  // namespace

// ---------------------------------------------------------------- tables

void Table::add_column(std::string name, bool is_numeric) {
  columns.push_back(std::move(name));
  numeric.push_back(is_numeric);
}

void Table::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns.size()) throw Error("row width does not match the header");
  rows.push_back(std::move(cells));
}

nlohmann::json Table::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::string& cell = row[c];
      if (cell.empty()) {
        obj[columns[c]] = nullptr;
      } else if (numeric[c]) {
        const double v = std::strtod(cell.c_str(), nullptr);
        if (std::isfinite(v)) {
          obj[columns[c]] = v;
        } else {
          obj[columns[c]] = cell;
        }
      } else {
        obj[columns[c]] = cell;
      }
    }
    out.push_back(std::move(obj));
  }
  return out;
}

std::string Table::to_csv() const {
  std::ostringstream out;
  out << "# flexnet-csv v1\n";
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
  return out.str();
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw Error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

// ----------------------------------------------------------- experiments

std::string to_string(Method method) { return method == Method::Exact ? "exact" : "simulate"; }

Method parse_method(const std::string& name) {
  if (name == "exact") return Method::Exact;
  if (name == "simulate") return Method::Simulate;
  throw ModelError("unknown method '" + name + "' (expected exact or simulate)");
}

NetworkModel scale_to_load(const NetworkModel& model, double load) {
  if (!(load > 0.0 && load < 1.0)) throw DomainError("load factor must lie in (0, 1)");
  const NetworkModel unit_model = with_uniform_rates(model, 1.0, 1.0);
  return with_uniform_rates(model, load * critical_arrival_scale(unit_model), 1.0);
}

NetworkModel scaled_family(const std::string& family, int n, double load) {
  if (family == "g1") return scale_to_load(family_g1(n), load);
  if (family == "g2") return scale_to_load(family_g2(n), load);
  throw ModelError("unknown family '" + family + "' (expected g1 or g2)");
}

NetworkModel resolve_model(const ModelSource& source) {
  if (!source.path.empty()) return load_model(source.path);
  if (source.family.empty()) throw ModelError("no model file or family given");
  return scaled_family(source.family, source.n, source.load);
}

void ExperimentSpec::validate() const {
  for (const auto& b : bounds) {
    if (!known_bound(b)) throw ModelError("unknown bound '" + b + "'");
  }
  if (source.path.empty() && !source.family.empty() && source.family != "g1" &&
      source.family != "g2") {
    throw ModelError("unknown family '" + source.family + "'");
  }
  if (i_max < 1) throw DomainError("i_max must be at least 1");
  if (method == Method::Simulate) {
    sim.validate();
    if (replications < 1) throw DomainError("at least one replication is needed");
  } else if (!(exact.max_boundary_mass > 0.0) || exact.initial_cap < 1) {
    throw DomainError("exact solver parameters incomplete");
  }
}

bool VerificationRow::pass() const {
  return std::all_of(bounds.begin(), bounds.end(), [](const BoundCheck& b) { return b.pass; });
}

OccupancyEstimate estimate(const NetworkModel& model, const ExperimentSpec& spec) {
  OccupancyEstimate out;
  out.method = spec.method;
  const auto levels = static_cast<std::size_t>(spec.i_max) + 1;
  if (spec.method == Method::Exact) {
    ExactResult res = solve_to_target(model, spec.exact);
    out.curve = res.occupancy.curve;
    out.slack = res.solution.truncation_slack + 2.0 * res.solution.tol;
    out.exact = std::move(res);
  } else {
    SimConfig cfg = spec.sim;
    cfg.i_max = spec.i_max;
    SimResult res = estimate_occupancy(model, cfg, spec.replications);
    if (res.aborted_unstable) {
      throw StabilityError("simulation aborted: total tasks exceeded the divergence guard at t = " +
                           format_number(res.abort_time));
    }
    out.curve = res.occupancy;
    out.slack = 0.0;
    out.sim = std::move(res);
  }
  if (out.curve.values.size() < levels) {
    out.curve.values.resize(levels, 0.0);
    out.curve.half_widths.resize(levels, 0.0);
  }
  return out;
}

std::vector<VerificationRow> verification_rows(const NetworkModel& model,
                                               const OccupancyEstimate& occ,
                                               const std::vector<std::string>& bounds, int i_max,
                                               int* valid_from_out) {
  const double rho0 = model.rho0();
  const double a = to_double(alpha(model.graph()));
  const double b = to_double(beta(model.graph()));
  for (const auto& name : bounds) {
    if (!known_bound(name)) throw ModelError("unknown bound '" + name + "'");
    if (name == "prop1" && !model.is_simple()) {
      throw ModelError("prop1 applies to simple models only (one dispatcher, identical servers)");
    }
  }
  auto point = [&](const std::string& name, int i) {
    if (name == "prop1") {
      const double rho = model.lambda(0) / model.mu(0);
      return simple_bound(rho, static_cast<int>(model.graph().num_servers()), i);
    }
    if (name == "thm1") return alpha_bound(rho0, a, i);
    if (name == "thm2") return beta_bound(rho0, b, i);
    return combined_bound(rho0, a, b, i);
  };

  int valid_from = i_max + 1;
  for (const auto& name : bounds) {
    for (int i = 0; i <= i_max; ++i) {
      if (point(name, i).valid) {
        valid_from = std::min(valid_from, i);
        break;
      }
    }
  }
  if (valid_from_out) *valid_from_out = valid_from;

  std::vector<VerificationRow> rows;
  for (int i = valid_from; i <= i_max; ++i) {
    VerificationRow row;
    row.i = i;
    row.estimate = occ.curve.values[static_cast<std::size_t>(i)];
    row.half_width = occ.curve.half_widths[static_cast<std::size_t>(i)];
    row.slack = occ.slack;
    for (const auto& name : bounds) {
      const BoundPoint p = point(name, i);
      BoundCheck c;
      c.name = name;
      c.value = p.value;
      c.log_value = p.log_value;
      c.asserted = p.valid;
      c.pass = !p.valid || row.estimate + row.half_width + row.slack >= p.value;
      row.bounds.push_back(std::move(c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool Verification::pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const VerificationRow& r) { return r.pass(); });
}

Table Verification::table() const {
  Table t;
  t.add_column("i");
  t.add_column("estimate");
  t.add_column("half_width");
  t.add_column("slack");
  t.add_column("valid_from");
  if (!rows.empty()) {
    for (const auto& b : rows.front().bounds) {
      t.add_column(b.name);
      t.add_column("ln_" + b.name);
      t.add_column("pass_" + b.name);
    }
  }
  for (const auto& r : rows) {
    std::vector<std::string> cells{std::to_string(r.i), format_number(r.estimate),
                                   format_number(r.half_width), format_number(r.slack),
                                   std::to_string(valid_from)};
    for (const auto& b : r.bounds) {
      cells.push_back(format_number(b.value));
      cells.push_back(format_number(b.log_value));
      cells.push_back(b.asserted ? (b.pass ? "1" : "0") : "");
    }
    t.add_row(std::move(cells));
  }
  return t;
}

Verification run_verification(const ExperimentSpec& spec) {
  spec.validate();
  return run_verification(resolve_model(spec.source), spec);
}

Verification run_verification(const NetworkModel& model, const ExperimentSpec& spec) {
  spec.validate();
  StabilityVerdict verdict = classify_ergodicity(model);
  if (verdict.status != Ergodicity::Ergodic) {
    std::string what = "model is " + to_string(verdict.status);
    if (verdict.witness) {
      what += "; witness {";
      for (std::size_t k = 0; k < verdict.witness->size(); ++k) {
        what += (k ? "," : "") + model.graph().server_id((*verdict.witness)[k]);
      }
      what += "}";
    }
    throw StabilityRejection(what, std::move(verdict));
  }
  Verification v{model, std::move(verdict), model.rho0(), to_double(alpha(model.graph())),
                 to_double(beta(model.graph())), 0, estimate(model, spec), {}};
  v.rows = verification_rows(model, v.occupancy, spec.bounds, spec.i_max, &v.valid_from);
  return v;
}

// ------------------------------------------------------------ family sweep

Table run_family_sweep(const SweepSpec& spec, bool* all_pass) {
  if (spec.family != "g1" && spec.family != "g2") {
    throw ModelError("unknown family '" + spec.family + "' (expected g1 or g2)");
  }
  if (spec.n_min < 1 || spec.n_max < spec.n_min) throw DomainError("empty n range");
  Table t;
  for (const char* c : {"n", "i"}) t.add_column(c);
  for (const char* c : {"alpha", "beta", "alpha_limit", "beta_limit"}) t.add_column(c, false);
  for (const char* c : {"rho0", "valid_from", "estimate", "half_width", "slack", "thm1", "thm2",
                        "thm3", "ln_thm3", "asserted", "pass"}) {
    t.add_column(c);
  }
  const std::string alpha_limit = spec.family == "g1" ? "1" : "inf";
  const std::string beta_limit = spec.family == "g1" ? "inf" : "2";
  bool ok = true;

  ExperimentSpec es;
  es.method = spec.method;
  es.i_max = spec.i_max;
  es.exact = spec.exact;
  es.sim = spec.sim;
  es.replications = spec.replications;
  for (int n = spec.n_min; n <= spec.n_max; ++n) {
    const NetworkModel model = scaled_family(spec.family, n, spec.load);
    StabilityVerdict verdict = classify_ergodicity(model);
    if (verdict.status != Ergodicity::Ergodic) {
      throw StabilityRejection("family " + spec.family + " at n = " + std::to_string(n) + " is " +
                                   to_string(verdict.status),
                               std::move(verdict));
    }
    const Rational a = alpha(model.graph());
    const Rational b = beta(model.graph());
    const double rho0 = model.rho0();
    const int valid_from = validity_threshold(rho0);
    es.sim.seed = replication_seed(spec.sim.seed, static_cast<std::size_t>(n) * 1000003u);
    const OccupancyEstimate occ = estimate(model, es);
    for (int i = 0; i <= spec.i_max; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const BoundPoint p1 = alpha_bound(rho0, to_double(a), i);
      const BoundPoint p2 = beta_bound(rho0, to_double(b), i);
      const BoundPoint p3 = combined_bound(rho0, to_double(a), to_double(b), i);
      const double est = occ.curve.values[k];
      const double hw = occ.curve.half_widths[k];
      const bool pass = !p3.valid || est + hw + occ.slack >= p3.value;
      ok = ok && pass;
      t.add_row({std::to_string(n), std::to_string(i), rational_text(a), rational_text(b),
                 alpha_limit, beta_limit, format_number(rho0), std::to_string(valid_from),
                 format_number(est), format_number(hw), format_number(occ.slack),
                 format_number(p1.value), format_number(p2.value), format_number(p3.value),
                 format_number(p3.log_value), p3.valid ? "1" : "0", pass ? "1" : "0"});
    }
  }
  if (all_pass) *all_pass = ok;
  return t;
}

// ------------------------------------------------------- random models

SampledModel sample_model(std::mt19937_64& rng, const SamplerOptions& options) {
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    const int nd = uniform_int(rng, 1, options.max_dispatchers);
    const int ns = uniform_int(rng, 1, options.max_servers);
    std::vector<std::string> ds, ss;
    for (int d = 1; d <= nd; ++d) ds.push_back("d" + std::to_string(d));
    for (int u = 1; u <= ns; ++u) ss.push_back("u" + std::to_string(u));
    std::vector<Edge> edges;
    std::vector<int> ddeg(static_cast<std::size_t>(nd), 0), sdeg(static_cast<std::size_t>(ns), 0);
    for (int d = 0; d < nd; ++d) {
      for (int u = 0; u < ns; ++u) {
        if (unit(rng) < options.edge_probability) {
          edges.emplace_back(ds[static_cast<std::size_t>(d)], ss[static_cast<std::size_t>(u)]);
          ++ddeg[static_cast<std::size_t>(d)];
          ++sdeg[static_cast<std::size_t>(u)];
        }
      }
    }
    RateSpec rates;
    for (int d = 0; d < nd; ++d) rates.lambda.push_back(log_uniform(rng, options.rate_min, options.rate_max));
    for (int u = 0; u < ns; ++u) rates.mu.push_back(log_uniform(rng, options.rate_min, options.rate_max));
    const auto isolated = [](const std::vector<int>& deg) {
      return std::find(deg.begin(), deg.end(), 0) != deg.end();
    };
    if (isolated(ddeg) || isolated(sdeg)) continue;

    NetworkModel model(BipartiteGraph(ds, ss, edges), rates);
    const StabilityVerdict verdict = check_ergodic(model);
    if (verdict.status != Ergodicity::Ergodic || verdict.margin < options.min_margin) {
      continue;
    }
    SampledModel out{std::move(model), attempt, std::nullopt};
    if (options.solvable) {
      try {
        ExactResult res = solve_to_target(out.model, *options.solvable);
        const double states = std::pow(res.solution.cap + 1.0, ns + options.spare_servers);
        if (states > static_cast<double>(options.solvable->max_states)) continue;
        out.exact = std::move(res);
      } catch (const CapacityError&) {
        continue;
      } catch (const ConvergenceError&) {
        continue;
      }
    }
    return out;
  }
  throw Error("model sampler gave up after " + std::to_string(options.max_attempts) + " attempts");
}

// --------------------------------------------------- monotonicity battery

bool MonotonicityReport::ok() const {
  return std::all_of(kinds.begin(), kinds.end(),
                     [](const KindSummary& k) { return k.violations == 0 && k.errors == 0; });
}

Table MonotonicityReport::table() const {
  Table t;
  t.add_column("model");
  t.add_column("kind", false);
  t.add_column("detail", false);
  for (const char* c : {"identity", "ergodic_after", "worst_margin", "slack", "violations"}) {
    t.add_column(c);
  }
  t.add_column("error", false);
  for (const auto& e : entries) {
    t.add_row({std::to_string(e.model_index), to_string(e.kind), e.detail, e.identity ? "1" : "0",
               e.ergodic_after ? "1" : "0", format_number(e.worst_margin), format_number(e.slack),
               std::to_string(e.violations), e.error});
  }
  return t;
}

MonotonicityReport run_monotonicity_battery(const MonotonicityOptions& options) {
  std::mt19937_64 rng(options.seed);
  SamplerOptions sampler = options.sampler;
  sampler.solvable = options.exact;
  sampler.spare_servers = std::max(sampler.spare_servers, 1);

  MonotonicityReport report;
  const TransformKind kinds[] = {TransformKind::ArrivalDecrease, TransformKind::ServiceIncrease,
                                 TransformKind::EdgeSimplify};
  for (TransformKind k : kinds) report.kinds.push_back(KindSummary{k, 0, 0, 0, 0.0, 0.0});
  for (auto& k : report.kinds) {
    k.worst_margin = std::numeric_limits<double>::infinity();
    k.worst_adjusted = std::numeric_limits<double>::infinity();
  }

  for (std::size_t m = 0; m < options.count; ++m) {
    SampledModel sample = sample_model(rng, sampler);
    const NetworkModel& base = sample.model;
    const auto& g = base.graph();
    const ExactResult& base_exact = *sample.exact;

    for (std::size_t kk = 0; kk < 3; ++kk) {
      MonotonicityEntry entry;
      entry.model_index = m;
      entry.kind = kinds[kk];
      std::optional<Transformed<NetworkModel>> tr;
      std::ostringstream detail;
      if (entry.kind == TransformKind::ArrivalDecrease) {
        // Every tenth model keeps its rates, giving equality rows.
        std::map<std::string, double> lam;
        const bool same = m % 10 == 0;
        const std::size_t forced = static_cast<std::size_t>(unit(rng) * g.num_dispatchers());
        for (std::size_t d = 0; d < g.num_dispatchers(); ++d) {
          const double f = same ? 1.0 : 0.5 + 0.5 * unit(rng);
          if (same || d == forced || unit(rng) < 0.5) {
            lam[g.dispatcher_id(d)] = base.lambda(d) * f;
            detail << g.dispatcher_id(d) << "x" << format_number(f) << ";";
          }
        }
        tr = decrease_arrivals(base, lam);
      } else if (entry.kind == TransformKind::ServiceIncrease) {
        const auto& blocks = base.partition().blocks;
        const std::size_t b = std::min(blocks.size() - 1,
                                       static_cast<std::size_t>(unit(rng) * blocks.size()));
        const double f = 1.0 + unit(rng);
        std::map<std::string, double> mu;
        for (std::size_t u : blocks[b]) {
          mu[g.server_id(u)] = base.mu(u) * f;
          detail << g.server_id(u) << "x" << format_number(f) << ";";
        }
        tr = increase_service(base, mu);
      } else {
        const auto edges = g.edges();
        const Edge e = edges[std::min(edges.size() - 1, static_cast<std::size_t>(unit(rng) * edges.size()))];
        detail << e.first << "," << e.second;
        tr = edge_simplify(base, e);
      }
      entry.detail = detail.str();
      entry.identity = tr->record.identity;

      try {
        entry.ergodic_after = check_ergodic(tr->model).status == Ergodicity::Ergodic;
        if (!entry.ergodic_after) throw StabilityError("transformed model is not ergodic");
        AutoCapOptions opts = options.exact;
        opts.initial_cap = std::max(opts.initial_cap, base_exact.solution.cap);
        const ExactResult other = solve_to_target(tr->model, opts);
        const auto mapping = origin_indices(tr->record, base, tr->model);
        const TailComparison cmp =
            tail_compare(base_exact.occupancy, other.occupancy, mapping, options.i_max);
        entry.worst_margin = cmp.worst_margin;
        entry.slack = cmp.slack;
        entry.violations = cmp.violations;
      } catch (const Error& err) {
        entry.error = err.what();
      }

      KindSummary& ks = report.kinds[kk];
      if (!entry.error.empty()) {
        ++ks.errors;
      } else {
        ++ks.compared;
        ks.violations += entry.violations;
        if (entry.worst_margin < ks.worst_margin) ks.worst_margin = entry.worst_margin;
        ks.worst_adjusted = std::min(ks.worst_adjusted, entry.worst_margin + entry.slack);
      }
      report.entries.push_back(std::move(entry));
    }
  }
  return report;
}

}  // namespace flexnet
