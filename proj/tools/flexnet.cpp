// flexnet command line tool.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 a verification check
// failed, 3 stability rejection.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flexnet/bounds.hpp"
#include "flexnet/errors.hpp"
#include "flexnet/exact.hpp"
#include "flexnet/harness.hpp"
#include "flexnet/metrics.hpp"
#include "flexnet/model_io.hpp"
#include "flexnet/sim.hpp"
#include "flexnet/stability.hpp"
#include "flexnet/transforms.hpp"

using namespace flexnet;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kCheckFailed = 2;
constexpr int kUnstable = 3;

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
};

void emit_text(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_atomic(g.out, text);
  }
}

void emit_json(const Globals& g, const json& doc) { emit_text(g, doc.dump(2) + "\n"); }

// Table in the requested format. CSV output gets its metadata in a sidecar
// (<out>.json, or stderr without --out); JSON output embeds it.
void emit_table(const Globals& g, const Table& table, const json& meta = nullptr) {
  if (g.format == "json") {
    json doc{{"rows", table.to_json()}};
    if (!meta.is_null()) doc["meta"] = meta;
    emit_json(g, doc);
    return;
  }
  if (!meta.is_null()) {
    if (g.out.empty()) {
      std::cerr << meta.dump(2) << "\n";
    } else {
      write_atomic(g.out + ".json", meta.dump(2) + "\n");
    }
  }
  emit_text(g, table.to_csv());
}

json rational_json(const Rational& r) {
  return {{"num", r.numerator()}, {"den", r.denominator()}, {"float", to_double(r)}};
}

std::vector<std::string> server_ids(const NetworkModel& m, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (std::size_t u : idx) out.push_back(m.graph().server_id(u));
  return out;
}

json verdict_json(const NetworkModel& m, const StabilityVerdict& v) {
  json out{{"status", to_string(v.status)},
           {"margin", v.margin},
           {"tightest", server_ids(m, v.tightest)},
           {"exact_arithmetic", v.exact_arithmetic}};
  out["witness"] = v.witness ? json(server_ids(m, *v.witness)) : json(nullptr);
  return out;
}

json record_json(const TransformRecord& r) {
  json out{{"kind", to_string(r.kind)}, {"identity", r.identity}};
  out["mapping"] = json::array();
  for (const auto& [to, from] : r.mapping) out["mapping"].push_back({{"server", to}, {"origin", from}});
  out["removed_edges"] = r.removed_edges;
  out["added_edges"] = r.added_edges;
  if (r.gamma) {
    out["gamma"] = *r.gamma;
    out["gamma_dispatchers"] = r.gamma_dispatchers;
    out["gamma_servers"] = r.gamma_servers;
  }
  return out;
}

// "d=0.4,e=0.2" -> map
std::map<std::string, double> parse_assignments(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ModelError("expected id=value, got '" + item + "'");
    out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return out;
}

SolverMethod parse_solver(const std::string& name) {
  if (name == "auto") return SolverMethod::Auto;
  if (name == "power") return SolverMethod::Power;
  if (name == "direct") return SolverMethod::Direct;
  throw ModelError("unknown solver '" + name + "'");
}

json solution_meta(const StationarySolution& s) {
  return {{"cap", s.cap},
          {"states", std::pow(s.cap + 1.0, static_cast<double>(s.num_servers))},
          {"reachable_states", s.reachable_states},
          {"method", to_string(s.method)},
          {"iterations", s.iterations},
          {"residual", s.residual},
          {"boundary_mass", s.boundary_mass},
          {"tail_ratio", s.tail_ratio},
          {"truncation_slack", s.truncation_slack},
          {"tol", s.tol}};
}

json sim_meta(const SimResult& r) {
  return {{"events", r.events},
          {"replications", r.replications},
          {"aborted_unstable", r.aborted_unstable},
          {"abort_time", r.abort_time},
          {"abort_total_tasks", r.abort_total_tasks},
          {"growth_rate", r.growth_rate},
          {"mean_total_tasks", r.mean_total_tasks},
          {"total_tasks_half_width", r.total_tasks_half_width},
          {"mean_sojourn", r.mean_sojourn},
          {"sojourn_half_width", r.sojourn_half_width},
          {"departures_measured", r.departures_measured}};
}

struct SimArgs {
  double horizon = 1e5;
  double burn_in = 0.2;
  int batches = 20;
  double guard = 1e6;
  std::size_t reps = 1;
  unsigned threads = 0;

  void add_to(CLI::App* app) {
    app->add_option("--horizon", horizon, "Simulated time per replication")->capture_default_str();
    app->add_option("--burn-in", burn_in, "Discarded fraction of the horizon")->capture_default_str();
    app->add_option("--batches", batches, "Batches for batch means")->capture_default_str();
    app->add_option("--guard", guard, "Abort above this many tasks")->capture_default_str();
    app->add_option("--reps", reps, "Independent replications")->capture_default_str();
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  SimConfig config(std::uint64_t seed, int i_max) const {
    SimConfig c;
    c.horizon = horizon;
    c.burn_in = burn_in;
    c.batches = batches;
    c.divergence_guard = guard;
    c.seed = seed;
    c.i_max = i_max;
    return c;
  }
};

struct ExactArgs {
  double target_mass = 1e-10;
  int initial_cap = 12;
  std::size_t max_states = 2'000'000;
  double tol = 1e-12;
  std::string solver = "auto";

  void add_to(CLI::App* app) {
    app->add_option("--target-mass", target_mass, "Boundary mass to reach")->capture_default_str();
    app->add_option("--initial-cap", initial_cap, "First queue cap tried")->capture_default_str();
    app->add_option("--max-states", max_states, "State budget")->capture_default_str();
    app->add_option("--tol", tol, "Solver tolerance")->capture_default_str();
    app->add_option("--solver", solver, "auto, power or direct")->capture_default_str();
  }

  AutoCapOptions options() const {
    AutoCapOptions o;
    o.max_boundary_mass = target_mass;
    o.initial_cap = initial_cap;
    o.max_states = max_states;
    o.solver.tol = tol;
    o.solver.method = parse_solver(solver);
    return o;
  }
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Load balancing on bipartite compatibility graphs: metrics, bounds, exact and "
               "simulated occupancy"};
  app.require_subcommand(1);
  // Global flags are accepted after the subcommand as well.
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output path (stdout when omitted)");
  app.add_option("--format", g.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  std::string model_path;
  int i_max = 10;
  int status = kOk;

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Flexibility metrics of a model's graph");
  metrics->add_option("model", model_path, "Model JSON")->required();
  metrics->callback([&] {
    const NetworkModel m = load_model(model_path);
    const auto& graph = m.graph();
    const WeightFunction w = min_weight(graph);
    json doc{{"alpha", rational_json(alpha(graph))},
             {"beta", rational_json(beta(graph))},
             {"theta_min_weight", rational_json(theta_metric(graph, w))},
             {"lambda0", m.lambda0()},
             {"mu0", m.mu0()},
             {"rho0", m.rho0()},
             {"dispatchers", graph.num_dispatchers()},
             {"servers", graph.num_servers()},
             {"edges", graph.num_edges()}};
    emit_json(g, doc);
  });

  // check-ergodic
  auto* ergodic = app.add_subcommand("check-ergodic", "Subset test for ergodicity");
  std::size_t max_servers = 25;
  ergodic->add_option("model", model_path, "Model JSON")->required();
  ergodic->add_option("--max-servers", max_servers, "Enumeration cap; larger models use min cuts")
      ->capture_default_str();
  ergodic->callback([&] {
    const NetworkModel m = load_model(model_path);
    StabilityOptions opts;
    opts.max_servers = max_servers;
    const StabilityVerdict v = classify_ergodicity(m, opts);
    json doc = verdict_json(m, v);
    doc["method"] = m.graph().num_servers() <= max_servers ? "enumeration" : "min-cut";
    emit_json(g, doc);
    if (v.status != Ergodicity::Ergodic) status = kUnstable;
  });

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Occupancy lower bounds for a model");
  std::string kinds = "thm1,thm2,thm3";
  std::optional<double> lambda0, mu0;
  bounds->add_option("model", model_path, "Model JSON")->required();
  bounds->add_option("--imax", i_max, "Largest level")->capture_default_str();
  bounds->add_option("--kinds", kinds, "Comma list of prop1, thm1, theta, thm2, thm3")
      ->capture_default_str();
  bounds->add_option("--lambda0", lambda0, "Arrival rate lower bound (default min lambda)");
  bounds->add_option("--mu0", mu0, "Service rate upper bound (default max mu)");
  bounds->callback([&] {
    const NetworkModel m = load_model(model_path);
    RateBounds rb = m.default_rate_bounds();
    if (lambda0) rb.lambda0 = *lambda0;
    if (mu0) rb.mu0 = *mu0;
    m.check_rate_bounds(rb);
    const double rho0 = rb.rho0();
    const double a = to_double(alpha(m.graph()));
    const double b = to_double(beta(m.graph()));
    const double theta = to_double(theta_metric(m.graph(), min_weight(m.graph())));
    Table t;
    for (const char* c : {"i", "kind"}) t.add_column(c, std::string(c) == "i");
    for (const char* c : {"parameter", "value", "ln_value", "asserted", "admissible"}) t.add_column(c);
    for (const auto& kind : split_commas(kinds)) {
      BoundCurve curve;
      if (kind == "prop1") {
        if (!m.is_simple()) throw ModelError("prop1 applies to simple models only");
        curve = make_bound_curve(BoundKind::Simple, m.lambda(0) / m.mu(0),
                                 static_cast<double>(m.graph().num_servers()), i_max);
      } else if (kind == "thm1") {
        curve = make_bound_curve(BoundKind::Alpha, rho0, a, i_max);
      } else if (kind == "theta") {
        curve = make_bound_curve(BoundKind::Theta, rho0, theta, i_max);
      } else if (kind == "thm2") {
        curve = make_bound_curve(BoundKind::Beta, rho0, b, i_max);
      } else if (kind == "thm3") {
        curve = make_bound_curve(BoundKind::Combined, rho0, a, i_max, b);
      } else {
        throw ModelError("unknown bound kind '" + kind + "'");
      }
      for (int i = 0; i <= i_max; ++i) {
        const auto k = static_cast<std::size_t>(i);
        t.add_row({std::to_string(i), kind, format_number(curve.parameter),
                   format_number(curve.values[k]), format_number(curve.log_values[k]),
                   i >= curve.valid_from ? "1" : "0", curve.parameter_admissible ? "1" : "0"});
      }
    }
    emit_table(g, t, json{{"rho0", rho0}, {"lambda0", rb.lambda0}, {"mu0", rb.mu0}});
  });

  // transform
  auto* transform = app.add_subcommand("transform", "Apply a model transformation");
  std::string op, edge_arg;
  double gamma = 0.0;
  std::vector<std::string> assignments;
  transform->add_option("model", model_path, "Model JSON")->required();
  transform->add_option("--op", op, "edge-simplify, full-simplify, gamma-split, decrease-arrivals, "
                                    "increase-service")
      ->required()
      ->check(CLI::IsMember({"edge-simplify", "full-simplify", "gamma-split", "decrease-arrivals",
                             "increase-service"}));
  transform->add_option("--edge", edge_arg, "Edge as d,u (edge-simplify)");
  transform->add_option("--gamma", gamma, "Degree threshold (gamma-split)");
  transform->add_option("--set", assignments, "id=rate pairs (rate changes)");
  transform->callback([&] {
    const NetworkModel m = load_model(model_path);
    json doc;
    if (op == "gamma-split") {
      const GammaSplit s = gamma_split(m, gamma);
      doc = {{"g0_model", model_to_json(s.g0_model)},
             {"g_gamma_model", model_to_json(s.g_gamma_model)},
             {"record", record_json(s.record)}};
    } else {
      Transformed<NetworkModel> t{m, {}};
      if (op == "edge-simplify") {
        const auto parts = split_commas(edge_arg);
        if (parts.size() != 2) throw ModelError("--edge expects d,u");
        t = edge_simplify(m, {parts[0], parts[1]});
      } else if (op == "full-simplify") {
        t = full_simplify(m);
      } else if (op == "decrease-arrivals") {
        t = decrease_arrivals(m, parse_assignments(assignments));
      } else {
        t = increase_service(m, parse_assignments(assignments));
      }
      doc = {{"model", model_to_json(t.model)}, {"record", record_json(t.record)}};
    }
    emit_json(g, doc);
  });

  // solve-exact
  auto* solve = app.add_subcommand("solve-exact", "Exact stationary occupancy of a truncated chain");
  std::optional<int> cap;
  ExactArgs exact_args;
  solve->add_option("model", model_path, "Model JSON")->required();
  solve->add_option("--cap", cap, "Fixed per-server queue cap (default: grow until the target mass)");
  solve->add_option("--imax", i_max, "Largest level reported")->capture_default_str();
  exact_args.add_to(solve);
  solve->callback([&] {
    const NetworkModel m = load_model(model_path);
    const AutoCapOptions opts = exact_args.options();
    const ExactResult r = cap ? solve_at_cap(m, *cap, opts.solver) : solve_to_target(m, opts);
    Table t;
    t.add_column("i");
    t.add_column("Eq_i");
    for (const auto& id : m.graph().servers()) t.add_column("tail_" + id);
    for (int i = 0; i <= i_max; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const bool inside = k < r.occupancy.curve.values.size();
      std::vector<std::string> row{std::to_string(i),
                                   format_number(inside ? r.occupancy.curve.values[k] : 0.0)};
      for (const auto& tail : r.occupancy.server_tails) row.push_back(format_number(inside ? tail[k] : 0.0));
      t.add_row(std::move(row));
    }
    json meta = solution_meta(r.solution);
    meta["mean_total_tasks"] = r.occupancy.mean_total_tasks;
    emit_table(g, t, meta);
  });

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulated occupancy with batch means CIs");
  SimArgs sim_args;
  simulate_cmd->add_option("model", model_path, "Model JSON")->required();
  simulate_cmd->add_option("--imax", i_max, "Largest level reported")->capture_default_str();
  sim_args.add_to(simulate_cmd);
  simulate_cmd->callback([&] {
    const NetworkModel m = load_model(model_path);
    const SimResult r = estimate_occupancy(m, sim_args.config(g.seed, i_max), sim_args.reps,
                                           sim_args.threads);
    if (r.aborted_unstable) {
      std::cerr << "simulation aborted: " << format_number(r.abort_total_tasks) << " tasks at t = "
                << format_number(r.abort_time) << "\n";
      emit_json(g, sim_meta(r));
      status = kUnstable;
      return;
    }
    Table t;
    for (const char* c : {"i", "estimate", "ci_lo", "ci_hi"}) t.add_column(c);
    for (int i = 0; i <= i_max; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double v = r.occupancy.values[k], h = r.occupancy.half_widths[k];
      t.add_row({std::to_string(i), format_number(v), format_number(v - h), format_number(v + h)});
    }
    emit_table(g, t, sim_meta(r));
  });

  // verify
  auto* verify = app.add_subcommand("verify", "Audit occupancy lower bounds on one model");
  std::string method = "exact", bound_list = "thm1,thm2,thm3", family;
  int family_n = 0;
  double load = 0.8;
  ExactArgs verify_exact;
  SimArgs verify_sim;
  verify->add_option("model", model_path, "Model JSON (or use --family)");
  verify->add_option("--family", family, "g1 or g2 instead of a model file");
  verify->add_option("--n", family_n, "Family size");
  verify->add_option("--load", load, "Family load factor in (0, 1)")->capture_default_str();
  verify->add_option("--method", method, "exact or simulate")->capture_default_str();
  verify->add_option("--bounds", bound_list, "Comma list of prop1, thm1, thm2, thm3")
      ->capture_default_str();
  verify->add_option("--imax", i_max, "Largest level")->capture_default_str();
  verify_exact.add_to(verify);
  verify_sim.add_to(verify);
  verify->callback([&] {
    ExperimentSpec spec;
    spec.source = {model_path, family, family_n, load};
    spec.method = parse_method(method);
    spec.bounds = split_commas(bound_list);
    spec.i_max = i_max;
    spec.exact = verify_exact.options();
    spec.sim = verify_sim.config(g.seed, i_max);
    spec.replications = verify_sim.reps;
    const Verification v = run_verification(spec);
    json meta{{"verdict", verdict_json(v.model, v.verdict)},
              {"rho0", v.rho0},
              {"alpha", v.alpha},
              {"beta", v.beta},
              {"valid_from", v.valid_from},
              {"method", to_string(spec.method)},
              {"pass", v.pass()}};
    if (v.occupancy.exact) meta["solver"] = solution_meta(v.occupancy.exact->solution);
    if (v.occupancy.sim) meta["simulation"] = sim_meta(*v.occupancy.sim);
    emit_table(g, v.table(), meta);
    if (!v.pass()) status = kCheckFailed;
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Bound audit across a graph family");
  SweepSpec sweep_spec;
  std::string sweep_method = "simulate";
  ExactArgs sweep_exact;
  SimArgs sweep_sim;
  sweep->add_option("--family", sweep_spec.family, "g1 or g2")->capture_default_str();
  sweep->add_option("--n-min", sweep_spec.n_min, "Smallest n")->capture_default_str();
  sweep->add_option("--n-max", sweep_spec.n_max, "Largest n")->capture_default_str();
  sweep->add_option("--load", sweep_spec.load, "Load factor in (0, 1)")->capture_default_str();
  sweep->add_option("--method", sweep_method, "exact or simulate")->capture_default_str();
  sweep->add_option("--imax", i_max, "Largest level")->capture_default_str();
  sweep_exact.add_to(sweep);
  sweep_sim.add_to(sweep);
  sweep->callback([&] {
    sweep_spec.method = parse_method(sweep_method);
    sweep_spec.i_max = i_max;
    sweep_spec.exact = sweep_exact.options();
    sweep_spec.sim = sweep_sim.config(g.seed, i_max);
    sweep_spec.replications = sweep_sim.reps;
    bool all_pass = false;
    const Table t = run_family_sweep(sweep_spec, &all_pass);
    emit_table(g, t, json{{"family", sweep_spec.family}, {"load", sweep_spec.load}, {"pass", all_pass}});
    if (!all_pass) status = kCheckFailed;
  });

  // monotonicity
  auto* mono = app.add_subcommand("monotonicity", "Stationary tail comparison under transformations");
  MonotonicityOptions mono_opts;
  mono->add_option("--count", mono_opts.count, "Random models")->capture_default_str();
  mono->add_option("--imax", i_max, "Largest level compared")->capture_default_str();
  mono->callback([&] {
    mono_opts.seed = g.seed;
    mono_opts.i_max = i_max;
    const MonotonicityReport r = run_monotonicity_battery(mono_opts);
    json kinds = json::array();
    for (const auto& k : r.kinds) {
      kinds.push_back({{"kind", to_string(k.kind)},
                       {"compared", k.compared},
                       {"violations", k.violations},
                       {"errors", k.errors},
                       {"worst_margin", k.worst_margin},
                       {"worst_adjusted", k.worst_adjusted}});
    }
    emit_table(g, r.table(), json{{"kinds", kinds}, {"ok", r.ok()}});
    if (!r.ok()) status = kCheckFailed;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const StabilityRejection& e) {
    std::cerr << "stability rejection: " << e.what() << "\n";
    return kUnstable;
  } catch (const StabilityError& e) {
    std::cerr << "stability rejection: " << e.what() << "\n";
    return kUnstable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return status;
}
