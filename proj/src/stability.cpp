#include "flexnet/stability.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <tuple>

#include "flexnet/errors.hpp"

namespace flexnet {

namespace {

using Mask = std::uint64_t;

// Digits after the decimal point needed to write x exactly as a short
// decimal, or nullopt when more than 9 would be needed or x is too large.
std::optional<std::pair<int, std::int64_t>> short_decimal(double x) {
  double scale = 1.0;
  for (int k = 0; k <= 9; ++k, scale *= 10.0) {
    const double s = x * scale;
    if (!(std::abs(s) < 1e15)) return std::nullopt;
    const double r = std::nearbyint(s);
    if (r / scale == x) return std::make_pair(k, static_cast<std::int64_t>(r));
  }
  return std::nullopt;
}

std::int64_t pow10(int k) {
  std::int64_t p = 1;
  while (k-- > 0) p *= 10;
  return p;
}

// Rates rescaled to integers with a common power of ten, when possible.
struct ScaledRates {
  std::vector<std::int64_t> lambda;
  std::vector<std::int64_t> mu;
  std::int64_t scale = 1;
};

std::optional<ScaledRates> scale_rates(const NetworkModel& model) {
  std::vector<std::pair<int, std::int64_t>> lam, mu;
  int digits = 0;
  for (double x : model.rates().lambda) {
    auto dec = short_decimal(x);
    if (!dec) return std::nullopt;
    digits = std::max(digits, dec->first);
    lam.push_back(*dec);
  }
  for (double x : model.rates().mu) {
    auto dec = short_decimal(x);
    if (!dec) return std::nullopt;
    digits = std::max(digits, dec->first);
    mu.push_back(*dec);
  }
  ScaledRates out;
  out.scale = pow10(digits);
  auto lift = [&](const auto& v, std::vector<std::int64_t>& dst) {
    for (const auto& [k, r] : v) {
      const std::int64_t f = pow10(digits - k);
      if (std::abs(r) > std::numeric_limits<std::int64_t>::max() / f) return false;
      dst.push_back(r * f);
    }
    return true;
  };
  if (!lift(lam, out.lambda) || !lift(mu, out.mu)) return std::nullopt;
  return out;
}

std::vector<std::size_t> mask_members(Mask mask) {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; mask != 0; ++u, mask >>= 1) {
    if (mask & 1U) out.push_back(u);
  }
  return out;
}

std::vector<Mask> neighbor_masks(const BipartiteGraph& g) {
  std::vector<Mask> masks(g.num_dispatchers(), 0);
  for (std::size_t d = 0; d < g.num_dispatchers(); ++d) {
    for (std::size_t u : g.dispatcher_neighbors(d)) masks[d] |= Mask{1} << u;
  }
  return masks;
}

void check_size(const NetworkModel& model, const StabilityOptions& options) {
  const std::size_t n = model.graph().num_servers();
  if (n > options.max_servers || n >= 63) {
    throw CapacityError("subset enumeration over " + std::to_string(n) +
                        " servers exceeds cap of " + std::to_string(options.max_servers));
  }
}

struct Candidate {
  Mask mask = 0;
  int size = 0;
  double slack = 0.0;
};

bool smaller_witness(const Candidate& a, const Candidate& b) {
  return std::tie(a.size, a.slack, a.mask) < std::tie(b.size, b.slack, b.mask);
}

bool tighter(const Candidate& a, const Candidate& b) {
  return std::tie(a.slack, a.size, a.mask) < std::tie(b.slack, b.size, b.mask);
}

// Dense Edmonds-Karp. Networks here have |D| + |S| + 2 nodes.
template <typename T>
class FlowNetwork {
 public:
  FlowNetwork(std::size_t nodes, T floor) : n_(nodes), floor_(floor), cap_(nodes * nodes, T{0}) {}

  void add(std::size_t a, std::size_t b, T c) { cap_[a * n_ + b] += c; }

  /// Saturates a maximum flow and returns the nodes reachable from s in the
  /// residual network: the source side of the inclusion-minimal min cut.
  std::vector<bool> min_cut(std::size_t s, std::size_t t) {
    std::vector<std::size_t> parent(n_);
    while (true) {
      std::vector<bool> seen(n_, false);
      std::vector<std::size_t> queue{s};
      seen[s] = true;
      for (std::size_t k = 0; k < queue.size() && !seen[t]; ++k) {
        const std::size_t a = queue[k];
        for (std::size_t b = 0; b < n_; ++b) {
          if (!seen[b] && cap_[a * n_ + b] > floor_) {
            seen[b] = true;
            parent[b] = a;
            queue.push_back(b);
          }
        }
      }
      if (!seen[t]) return seen;
      T push = cap_[parent[t] * n_ + t];
      for (std::size_t v = t; v != s; v = parent[v]) push = std::min(push, cap_[parent[v] * n_ + v]);
      for (std::size_t v = t; v != s; v = parent[v]) {
        cap_[parent[v] * n_ + v] -= push;
        cap_[v * n_ + parent[v]] += push;
      }
    }
  }

 private:
  std::size_t n_;
  T floor_;
  std::vector<T> cap_;
};

// Inclusion-minimal server set U containing `forced` that minimizes
// sum_{u in U} mu(u) - sum_{N(d) subset of U} lambda(d).
template <typename T>
std::vector<bool> min_slack_set(const BipartiteGraph& g, const std::vector<T>& lambda,
                                const std::vector<T>& mu, std::size_t forced, T floor) {
  const std::size_t nd = g.num_dispatchers(), ns = g.num_servers();
  T unbounded{1};
  for (T x : lambda) unbounded += x;
  for (T x : mu) unbounded += x;
  const std::size_t source = nd + ns, sink = source + 1;
  FlowNetwork<T> net(nd + ns + 2, floor);
  for (std::size_t d = 0; d < nd; ++d) {
    net.add(source, d, lambda[d]);
    for (std::size_t u : g.dispatcher_neighbors(d)) net.add(d, nd + u, unbounded);
  }
  for (std::size_t u = 0; u < ns; ++u) net.add(nd + u, sink, mu[u]);
  net.add(source, nd + forced, unbounded);
  const std::vector<bool> side = net.min_cut(source, sink);
  return std::vector<bool>(side.begin() + static_cast<std::ptrdiff_t>(nd),
                           side.begin() + static_cast<std::ptrdiff_t>(nd + ns));
}

template <typename T>
T slack_of(const BipartiteGraph& g, const std::vector<T>& lambda, const std::vector<T>& mu,
           const std::vector<bool>& in_u) {
  T slack{0};
  for (std::size_t u = 0; u < in_u.size(); ++u)
    if (in_u[u]) slack += mu[u];
  for (std::size_t d = 0; d < g.num_dispatchers(); ++d) {
    const auto& nbrs = g.dispatcher_neighbors(d);
    if (std::all_of(nbrs.begin(), nbrs.end(), [&](std::size_t u) { return in_u[u]; })) {
      slack -= lambda[d];
    }
  }
  return slack;
}

std::vector<std::size_t> members(const std::vector<bool>& in_u) {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < in_u.size(); ++u)
    if (in_u[u]) out.push_back(u);
  return out;
}

}  // namespace

std::string to_string(Ergodicity status) {
  switch (status) {
    case Ergodicity::Ergodic: return "Ergodic";
    case Ergodicity::NotErgodic: return "NotErgodic";
    case Ergodicity::Boundary: return "Boundary";
  }
  return "?";
}

StabilityVerdict check_ergodic(const NetworkModel& model, const StabilityOptions& options) {
  check_size(model, options);
  const auto& g = model.graph();
  const std::size_t n = g.num_servers();
  const std::vector<Mask> dmask = neighbor_masks(g);
  const auto scaled = scale_rates(model);

  std::optional<Candidate> tightest, negative, zero;
  const Mask end = Mask{1} << n;
  for (Mask U = 1; U < end; ++U) {
    Candidate c{U, std::popcount(U), 0.0};
    int sign = 0;
    if (scaled) {
      __int128 serve = 0, arrive = 0;
      for (Mask m = U; m != 0; m &= m - 1) serve += scaled->mu[std::countr_zero(m)];
      for (std::size_t d = 0; d < dmask.size(); ++d) {
        if ((dmask[d] & ~U) == 0) arrive += scaled->lambda[d];
      }
      const __int128 slack = serve - arrive;
      sign = (slack > 0) - (slack < 0);
      c.slack = static_cast<double>(slack) / static_cast<double>(scaled->scale);
    } else {
      double serve = 0.0, arrive = 0.0;
      for (Mask m = U; m != 0; m &= m - 1) serve += model.mu(std::countr_zero(m));
      for (std::size_t d = 0; d < dmask.size(); ++d) {
        if ((dmask[d] & ~U) == 0) arrive += model.lambda(d);
      }
      c.slack = serve - arrive;
      const double band = options.epsilon * std::max(1.0, serve + arrive);
      sign = c.slack > band ? 1 : (c.slack < -band ? -1 : 0);
    }
    if (!tightest || tighter(c, *tightest)) tightest = c;
    if (sign < 0 && (!negative || smaller_witness(c, *negative))) negative = c;
    if (sign == 0 && (!zero || smaller_witness(c, *zero))) zero = c;
  }

  StabilityVerdict v;
  v.margin = tightest->slack;
  v.tightest = mask_members(tightest->mask);
  v.exact_arithmetic = scaled.has_value();
  if (negative) {
    v.status = Ergodicity::NotErgodic;
    v.witness = mask_members(negative->mask);
  } else if (zero) {
    v.status = Ergodicity::Boundary;
    v.witness = mask_members(zero->mask);
  } else {
    v.status = Ergodicity::Ergodic;
  }
  return v;
}

StabilityVerdict check_ergodic_by_cut(const NetworkModel& model, const StabilityOptions& options) {
  const auto& g = model.graph();
  const std::size_t ns = g.num_servers();
  const auto scaled = scale_rates(model);
  StabilityVerdict v;
  v.exact_arithmetic = scaled.has_value();
  int sign = 1;
  if (scaled) {
    std::optional<std::int64_t> best;
    for (std::size_t u = 0; u < ns; ++u) {
      const auto in_u = min_slack_set<std::int64_t>(g, scaled->lambda, scaled->mu, u, 0);
      const std::int64_t slack = slack_of(g, scaled->lambda, scaled->mu, in_u);
      if (!best || slack < *best) {
        best = slack;
        v.tightest = members(in_u);
      }
    }
    v.margin = static_cast<double>(*best) / static_cast<double>(scaled->scale);
    sign = (*best > 0) - (*best < 0);
  } else {
    const auto& lambda = model.rates().lambda;
    const auto& mu = model.rates().mu;
    double total = 0.0;
    for (double x : lambda) total += x;
    for (double x : mu) total += x;
    std::optional<double> best;
    for (std::size_t u = 0; u < ns; ++u) {
      const auto in_u = min_slack_set<double>(g, lambda, mu, u, 1e-15 * total);
      const double slack = slack_of(g, lambda, mu, in_u);
      if (!best || slack < *best) {
        best = slack;
        v.tightest = members(in_u);
      }
    }
    v.margin = *best;
    const double band = options.epsilon * std::max(1.0, total);
    sign = v.margin > band ? 1 : (v.margin < -band ? -1 : 0);
  }
  if (sign < 0) {
    v.status = Ergodicity::NotErgodic;
    v.witness = v.tightest;
  } else if (sign == 0) {
    v.status = Ergodicity::Boundary;
    v.witness = v.tightest;
  } else {
    v.status = Ergodicity::Ergodic;
  }
  return v;
}

StabilityVerdict classify_ergodicity(const NetworkModel& model, const StabilityOptions& options) {
  if (model.graph().num_servers() <= options.max_servers) return check_ergodic(model, options);
  return check_ergodic_by_cut(model, options);
}

double critical_arrival_scale(const NetworkModel& model, const StabilityOptions& options) {
  const auto& g = model.graph();
  if (g.num_servers() > options.max_servers) {
    // Ratio iteration: each cut either certifies c or yields a subset with a
    // strictly smaller mu(U) / lambda(U).
    const auto& mu = model.rates().mu;
    double c = 0.0, mu_all = 0.0, lambda_all = 0.0;
    for (double x : mu) mu_all += x;
    for (double x : model.rates().lambda) lambda_all += x;
    c = mu_all / lambda_all;
    for (int round = 0; round < 200; ++round) {
      std::vector<double> lambda = model.rates().lambda;
      for (double& x : lambda) x *= c;
      std::optional<std::vector<bool>> improving;
      for (std::size_t u = 0; u < g.num_servers() && !improving; ++u) {
        auto in_u = min_slack_set<double>(g, lambda, mu, u, 1e-15 * (mu_all + c * lambda_all));
        if (slack_of(g, lambda, mu, in_u) < -1e-12 * mu_all) improving = std::move(in_u);
      }
      if (!improving) return c;
      const std::vector<double> zero(mu.size(), 0.0);
      const double arrive = -slack_of(g, model.rates().lambda, zero, *improving);
      const double serve = slack_of(g, std::vector<double>(lambda.size(), 0.0), mu, *improving);
      c = serve / arrive;
    }
    throw ConvergenceError("critical arrival scale did not settle");
  }
  check_size(model, options);
  const std::vector<Mask> dmask = neighbor_masks(g);
  double best = std::numeric_limits<double>::infinity();
  const Mask end = Mask{1} << g.num_servers();
  for (Mask U = 1; U < end; ++U) {
    double serve = 0.0, arrive = 0.0;
    for (Mask m = U; m != 0; m &= m - 1) serve += model.mu(std::countr_zero(m));
    for (std::size_t d = 0; d < dmask.size(); ++d) {
      if ((dmask[d] & ~U) == 0) arrive += model.lambda(d);
    }
    if (arrive > 0.0) best = std::min(best, serve / arrive);
  }
  return best;
}

}  // namespace flexnet
