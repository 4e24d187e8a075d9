#include "flexnet/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "flexnet/errors.hpp"
#include "flexnet/stability.hpp"

namespace flexnet {

namespace {

// Steps `digits` to the next state in mixed radix order.
void advance(std::vector<int>& digits, int cap) {
  for (int& x : digits) {
    if (x < cap) {
      ++x;
      return;
    }
    x = 0;
  }
}

// States reachable from the empty state, ascending.
std::vector<std::uint32_t> reachable_from_empty(const TruncatedChain& chain) {
  std::vector<char> seen(chain.num_states, 0);
  std::vector<std::uint32_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const std::uint32_t s = stack.back();
    stack.pop_back();
    for (std::size_t k = chain.row_start[s]; k < chain.row_start[s + 1]; ++k) {
      const std::uint32_t t = chain.target[k];
      if (!seen[t]) {
        seen[t] = 1;
        stack.push_back(t);
      }
    }
  }
  std::vector<std::uint32_t> out;
  for (std::size_t s = 0; s < chain.num_states; ++s) {
    if (seen[s]) out.push_back(static_cast<std::uint32_t>(s));
  }
  return out;
}

// Compact relabeling: local[s] = position of s in `states`, or npos.
std::vector<std::uint32_t> local_index(const TruncatedChain& chain,
                                       const std::vector<std::uint32_t>& states) {
  std::vector<std::uint32_t> local(chain.num_states, std::numeric_limits<std::uint32_t>::max());
  for (std::size_t k = 0; k < states.size(); ++k) local[states[k]] = static_cast<std::uint32_t>(k);
  return local;
}

std::size_t power_iteration(const TruncatedChain& chain, const std::vector<std::uint32_t>& states,
                            const SolverOptions& options, std::vector<double>& pi_local,
                            double& error_estimate) {
  const std::size_t m = states.size();
  const auto local = local_index(chain, states);
  double unif = 0.0;
  for (std::uint32_t s : states) unif = std::max(unif, chain.exit_rate[s]);
  if (unif == 0.0) {
    pi_local.assign(m, 1.0 / static_cast<double>(m));
    return 0;
  }

  // Uniformized kernel over the compact states, stored as incoming lists so
  // that one sweep produces the next iterate in a fixed reduction order.
  std::vector<std::size_t> in_start(m + 1, 0);
  for (std::uint32_t s : states) {
    for (std::size_t k = chain.row_start[s]; k < chain.row_start[s + 1]; ++k) {
      ++in_start[local[chain.target[k]] + 1];
    }
  }
  for (std::size_t j = 0; j < m; ++j) in_start[j + 1] += in_start[j];
  std::vector<std::uint32_t> in_source(in_start.back());
  std::vector<double> in_prob(in_start.back());
  {
    std::vector<std::size_t> fill(in_start.begin(), in_start.end() - 1);
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint32_t s = states[i];
      for (std::size_t k = chain.row_start[s]; k < chain.row_start[s + 1]; ++k) {
        const std::size_t j = local[chain.target[k]];
        in_source[fill[j]] = static_cast<std::uint32_t>(i);
        in_prob[fill[j]] = chain.rate[k] / unif;
        ++fill[j];
      }
    }
  }
  std::vector<double> stay(m);
  for (std::size_t i = 0; i < m; ++i) stay[i] = 1.0 - chain.exit_rate[states[i]] / unif;

  std::vector<double> cur(m, 0.0), next(m, 0.0);
  cur[0] = 1.0;  // empty state
  // Contraction rate r from L1 differences 32 sweeps apart; the remaining L1
  // error after stopping is estimated by the geometric tail l1 r / (1 - r).
  // It bounds the error of any tail probability read off the iterate.
  constexpr std::size_t gap = 32;
  std::vector<double> history(gap, 0.0);
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    double diff = 0.0, l1 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double v = cur[j] * stay[j];
      for (std::size_t k = in_start[j]; k < in_start[j + 1]; ++k) v += cur[in_source[k]] * in_prob[k];
      diff = std::max(diff, std::abs(v - cur[j]));
      l1 += std::abs(v - cur[j]);
      next[j] = v;
    }
    cur.swap(next);
    if (!std::isfinite(diff)) throw ConvergenceError("power iteration diverged");
    if (it % 1024 == 0) {
      double total = 0.0;
      for (double v : cur) total += v;
      for (double& v : cur) v /= total;
    }
    const double old = history[it % gap];
    history[it % gap] = l1;
    if (diff < options.tol && it > gap) {
      const double r = old > 0.0 ? std::pow(l1 / old, 1.0 / gap) : 0.0;
      error_estimate = r < 1.0 ? l1 * r / (1.0 - r) : std::numeric_limits<double>::infinity();
      pi_local = std::move(cur);
      return it;
    }
  }
  throw ConvergenceError("power iteration did not converge within " +
                         std::to_string(options.max_iterations) + " iterations");
}

void direct_solve(const TruncatedChain& chain, const std::vector<std::uint32_t>& states,
                  std::vector<double>& pi_local) {
  const std::size_t m = states.size();
  pi_local.assign(m, 0.0);
  pi_local[0] = 1.0;
  if (m == 1) return;
  const auto local = local_index(chain, states);

  // Balance equations for states j != empty with pi(empty) pinned to 1:
  //   sum_{i != 0} pi_i Q(i, j) = -Q(0, j).
  const auto n = static_cast<Eigen::Index>(m - 1);
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t s = states[i];
    if (i > 0) {
      triplets.emplace_back(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(i - 1),
                            -chain.exit_rate[s]);
    }
    for (std::size_t k = chain.row_start[s]; k < chain.row_start[s + 1]; ++k) {
      const std::size_t j = local[chain.target[k]];
      if (j == 0) continue;
      if (i == 0) {
        rhs[static_cast<Eigen::Index>(j - 1)] -= chain.rate[k];
      } else {
        triplets.emplace_back(static_cast<Eigen::Index>(j - 1), static_cast<Eigen::Index>(i - 1),
                              chain.rate[k]);
      }
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw ConvergenceError("sparse LU factorization failed");
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw ConvergenceError("sparse LU solve failed");
  for (Eigen::Index k = 0; k < n; ++k) {
    // Round-off can leave tiny negative entries deep in the tail.
    pi_local[static_cast<std::size_t>(k) + 1] = std::max(0.0, x[k]);
  }
}

}  // namespace

std::vector<int> TruncatedChain::decode(std::size_t state) const {
  std::vector<int> x(num_servers);
  const auto base = static_cast<std::size_t>(cap) + 1;
  for (std::size_t u = 0; u < num_servers; ++u) {
    x[u] = static_cast<int>(state % base);
    state /= base;
  }
  return x;
}

std::size_t TruncatedChain::encode(std::span<const int> lengths) const {
  std::size_t s = 0;
  for (std::size_t u = 0; u < num_servers; ++u) s += static_cast<std::size_t>(lengths[u]) * stride[u];
  return s;
}

double TruncatedChain::max_exit_rate() const {
  return exit_rate.empty() ? 0.0 : *std::max_element(exit_rate.begin(), exit_rate.end());
}

TruncatedChain build_generator(const NetworkModel& model, int cap, const ChainOptions& options) {
  if (cap < 1) throw DomainError("queue cap must be at least 1");
  const auto& g = model.graph();
  const std::size_t ns = g.num_servers();
  const auto base = static_cast<std::size_t>(cap) + 1;
  const std::size_t limit = std::min<std::size_t>(options.max_states,
                                                  std::numeric_limits<std::uint32_t>::max());
  std::size_t states = 1;
  std::vector<std::size_t> stride(ns);
  for (std::size_t u = 0; u < ns; ++u) {
    stride[u] = states;
    if (states > limit / base) {
      throw CapacityError("truncated chain with cap " + std::to_string(cap) + " over " +
                          std::to_string(ns) + " servers exceeds the state cap of " +
                          std::to_string(options.max_states));
    }
    states *= base;
  }

  TruncatedChain chain{model, ns, cap, states, std::move(stride), {}, {}, {}, {}};
  chain.row_start.reserve(states + 1);
  chain.exit_rate.reserve(states);
  chain.row_start.push_back(0);

  std::vector<int> x(ns, 0);
  std::vector<std::pair<std::uint32_t, double>> row;
  std::vector<std::size_t> ties;
  for (std::size_t s = 0; s < states; ++s, advance(x, cap)) {
    row.clear();
    for (std::size_t d = 0; d < g.num_dispatchers(); ++d) {
      int shortest = cap;
      ties.clear();
      for (std::size_t u : g.dispatcher_neighbors(d)) {
        if (x[u] < shortest) {
          shortest = x[u];
          ties.clear();
        }
        if (x[u] == shortest) ties.push_back(u);
      }
      if (shortest == cap) continue;  // dropped at the cap
      const double share = model.lambda(d) / static_cast<double>(ties.size());
      for (std::size_t u : ties) row.emplace_back(static_cast<std::uint32_t>(s + chain.stride[u]), share);
    }
    for (std::size_t b = 0; b < model.partition().blocks.size(); ++b) {
      std::size_t delta = 0;
      for (std::size_t u : model.partition().blocks[b]) {
        if (x[u] > 0) delta += chain.stride[u];
      }
      if (delta > 0) row.emplace_back(static_cast<std::uint32_t>(s - delta), model.block_rate(b));
    }
    std::sort(row.begin(), row.end());
    double exit = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k > 0 && row[k].first == chain.target.back()) {
        chain.rate.back() += row[k].second;
      } else {
        chain.target.push_back(row[k].first);
        chain.rate.push_back(row[k].second);
      }
      exit += row[k].second;
    }
    chain.exit_rate.push_back(exit);
    chain.row_start.push_back(chain.target.size());
  }
  return chain;
}

std::string to_string(SolverMethod method) {
  switch (method) {
    case SolverMethod::Auto: return "auto";
    case SolverMethod::Power: return "power";
    case SolverMethod::Direct: return "direct";
  }
  return "?";
}

StationarySolution stationary(const TruncatedChain& chain, const SolverOptions& options) {
  if (options.require_ergodic) {
    const auto verdict = classify_ergodicity(chain.model);
    if (verdict.status != Ergodicity::Ergodic) {
      throw StabilityError("exact solve refused: model is " + to_string(verdict.status));
    }
  }
  const auto states = reachable_from_empty(chain);

  StationarySolution sol;
  sol.num_servers = chain.num_servers;
  sol.cap = chain.cap;
  sol.tol = options.tol;
  sol.reachable_states = states.size();
  sol.method = options.method;
  if (sol.method == SolverMethod::Auto) {
    sol.method = states.size() <= options.direct_max_states ? SolverMethod::Direct : SolverMethod::Power;
  }

  std::vector<double> pi_local;
  if (sol.method == SolverMethod::Direct) {
    direct_solve(chain, states, pi_local);
  } else {
    double error_estimate = 0.0;
    sol.iterations = power_iteration(chain, states, options, pi_local, error_estimate);
    if (!std::isfinite(error_estimate)) {
      throw ConvergenceError("power iteration stopped without measurable contraction");
    }
    sol.tol = std::max(sol.tol, error_estimate);
  }
  double total = 0.0;
  for (double v : pi_local) total += v;
  if (!(total > 0.0) || !std::isfinite(total)) throw ConvergenceError("stationary vector is degenerate");

  sol.pi.assign(chain.num_states, 0.0);
  for (std::size_t k = 0; k < states.size(); ++k) sol.pi[states[k]] = pi_local[k] / total;

  // Residual of pi Q and the distribution of the longest queue near the cap.
  std::vector<double> flow(chain.num_states, 0.0);
  double at_cap = 0.0, below_cap = 0.0;
  for (std::uint32_t s : states) {
    const double p = sol.pi[s];
    flow[s] -= p * chain.exit_rate[s];
    for (std::size_t k = chain.row_start[s]; k < chain.row_start[s + 1]; ++k) {
      flow[chain.target[k]] += p * chain.rate[k];
    }
    std::size_t rest = s;
    int longest = 0;
    for (std::size_t u = 0; u < chain.num_servers; ++u) {
      longest = std::max(longest, static_cast<int>(rest % (static_cast<std::size_t>(chain.cap) + 1)));
      rest /= static_cast<std::size_t>(chain.cap) + 1;
    }
    if (longest == chain.cap) at_cap += p;
    if (longest == chain.cap - 1) below_cap += p;
  }
  for (double f : flow) sol.residual = std::max(sol.residual, std::abs(f));
  sol.boundary_mass = at_cap;
  sol.tail_ratio = below_cap > 0.0 ? std::clamp(at_cap / below_cap, 0.0, 0.999) : 0.0;
  sol.truncation_slack = at_cap / (1.0 - sol.tail_ratio);
  return sol;
}

ExactOccupancy occupancy_exact(const StationarySolution& solution) {
  const std::size_t ns = solution.num_servers;
  const auto levels = static_cast<std::size_t>(solution.cap) + 1;
  std::vector<std::vector<double>> marginal(ns, std::vector<double>(levels, 0.0));
  ExactOccupancy out;
  std::vector<int> x(ns, 0);
  for (std::size_t s = 0; s < solution.pi.size(); ++s, advance(x, solution.cap)) {
    const double p = solution.pi[s];
    if (p == 0.0) continue;
    for (std::size_t u = 0; u < ns; ++u) {
      marginal[u][static_cast<std::size_t>(x[u])] += p;
      out.mean_total_tasks += p * x[u];
    }
  }
  out.server_tails.assign(ns, std::vector<double>(levels, 0.0));
  for (std::size_t u = 0; u < ns; ++u) {
    double acc = 0.0;
    for (std::size_t i = levels; i-- > 1;) {
      acc += marginal[u][i];
      out.server_tails[u][i] = acc;
    }
    out.server_tails[u][0] = 1.0;
  }
  out.curve.source = OccupancySource::Exact;
  out.curve.values.assign(levels, 0.0);
  out.curve.half_widths.assign(levels, 0.0);
  for (std::size_t i = 0; i < levels; ++i) {
    double sum = 0.0;
    for (std::size_t u = 0; u < ns; ++u) sum += out.server_tails[u][i];
    out.curve.values[i] = std::min(1.0, sum / static_cast<double>(ns));
  }
  out.curve.truncation_slack = solution.truncation_slack;
  out.boundary_mass = solution.boundary_mass;
  out.tol = solution.tol;
  return out;
}

TailComparison tail_compare(const ExactOccupancy& a, const ExactOccupancy& b,
                            std::span<const std::size_t> mapping, int i_max) {
  if (mapping.size() != b.server_tails.size()) throw ModelError("mapping incomplete");
  for (std::size_t w : mapping) {
    if (w >= a.server_tails.size()) throw ModelError("mapping references unknown server");
  }
  auto tail = [](const std::vector<double>& t, int i) {
    return static_cast<std::size_t>(i) < t.size() ? t[static_cast<std::size_t>(i)] : 0.0;
  };
  TailComparison cmp;
  cmp.slack = a.curve.truncation_slack + b.curve.truncation_slack + a.tol + b.tol;
  cmp.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < mapping.size(); ++w) {
    for (int i = 0; i <= i_max; ++i) {
      const double margin = tail(a.server_tails[mapping[w]], i) - tail(b.server_tails[w], i);
      ++cmp.comparisons;
      if (margin < cmp.worst_margin) {
        cmp.worst_margin = margin;
        cmp.worst_server = w;
        cmp.worst_level = i;
      }
      if (margin < -cmp.slack) ++cmp.violations;
    }
  }
  return cmp;
}

ExactResult solve_at_cap(const NetworkModel& model, int cap, const SolverOptions& options) {
  ChainOptions chain_options;
  const TruncatedChain chain = build_generator(model, cap, chain_options);
  StationarySolution sol = stationary(chain, options);
  ExactOccupancy occ = occupancy_exact(sol);
  return {std::move(sol), std::move(occ)};
}

ExactResult solve_to_target(const NetworkModel& model, const AutoCapOptions& options) {
  const std::size_t ns = model.graph().num_servers();
  auto states_for = [&](int cap) {
    double states = std::pow(static_cast<double>(cap) + 1.0, static_cast<double>(ns));
    return states;
  };
  int cap = options.initial_cap;
  for (int round = 0; round < options.max_rounds; ++round) {
    if (states_for(cap) > static_cast<double>(options.max_states)) {
      throw CapacityError("cap " + std::to_string(cap) + " over " + std::to_string(ns) +
                          " servers exceeds the state budget");
    }
    ExactResult res = solve_at_cap(model, cap, options.solver);
    const double bm = res.solution.boundary_mass;
    if (bm <= options.max_boundary_mass) return res;
    const double r = res.solution.tail_ratio;
    if (!(r > 0.0) || r >= 0.999) {
      throw CapacityError("boundary mass does not decay geometrically at cap " + std::to_string(cap));
    }
    const double extra = std::log(options.max_boundary_mass / bm) / std::log(r);
    cap += std::max(4, static_cast<int>(std::ceil(extra)) + 2);
  }
  throw CapacityError("boundary mass target not met after " + std::to_string(options.max_rounds) +
                      " rounds");
}

}  // namespace flexnet
