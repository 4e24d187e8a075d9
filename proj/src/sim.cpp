#include "flexnet/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "flexnet/errors.hpp"

namespace flexnet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// mt19937_64 is fully specified by the standard; the distributions are not,
// so sampling is done here to keep results identical across toolchains.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }

 private:
  std::mt19937_64 gen_;
};

double t_quantile(double confidence, std::size_t n) {
  boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

MeanCi batch_ci(const std::vector<double>& xs, double confidence) {
  std::vector<double> v;
  for (double x : xs) {
    if (std::isfinite(x)) v.push_back(x);
  }
  MeanCi out;
  if (v.empty()) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.half_width = t_quantile(confidence, v.size()) * std::sqrt(ss / (n - 1.0) / n);
  return out;
}

// Per-batch raw data, before statistics.
struct Batches {
  std::vector<std::vector<double>> occupancy;  // [batch][level]
  std::vector<double> total;
  std::vector<double> beyond;
  std::vector<std::vector<double>> server;  // [batch][server]
  std::vector<double> sojourn;
};

void summarize(const Batches& b, std::size_t num_servers, int i_max, double confidence,
               SimResult& r) {
  r.batch_occupancy = b.occupancy;
  r.batch_total_tasks = b.total;
  r.batch_sojourn = b.sojourn;
  const auto levels = static_cast<std::size_t>(i_max) + 1;
  r.occupancy.source = OccupancySource::Simulated;
  r.occupancy.values.assign(levels, 0.0);
  r.occupancy.half_widths.assign(levels, 0.0);
  r.occupancy.values[0] = 1.0;
  std::vector<double> column(b.total.size());
  for (std::size_t i = 1; i < levels; ++i) {
    for (std::size_t k = 0; k < column.size(); ++k) column[k] = b.occupancy[k][i];
    const MeanCi ci = batch_ci(column, confidence);
    r.occupancy.values[i] = ci.mean;
    r.occupancy.half_widths[i] = ci.half_width;
  }
  const MeanCi total = batch_ci(b.total, confidence);
  r.mean_total_tasks = total.mean;
  r.total_tasks_half_width = total.half_width;
  r.beyond_i_max = batch_ci(b.beyond, confidence).mean;
  r.server_mean_length.assign(num_servers, 0.0);
  r.server_length_half_width.assign(num_servers, 0.0);
  for (std::size_t u = 0; u < num_servers; ++u) {
    for (std::size_t k = 0; k < column.size(); ++k) column[k] = b.server[k][u];
    const MeanCi ci = batch_ci(column, confidence);
    r.server_mean_length[u] = ci.mean;
    r.server_length_half_width[u] = ci.half_width;
  }
  const MeanCi soj = batch_ci(b.sojourn, confidence);
  r.mean_sojourn = soj.mean;
  r.sojourn_half_width = soj.half_width;
}

struct RawRun {
  Batches batches;
  std::uint64_t events = 0;
  std::uint64_t departures_measured = 0;
  bool aborted = false;
  double abort_time = 0.0;
  double abort_total = 0.0;
};

RawRun run_once(const NetworkModel& model, const SimConfig& cfg, std::uint64_t seed) {
  const auto& g = model.graph();
  const std::size_t nd = g.num_dispatchers();
  const std::size_t ns = g.num_servers();
  const auto& blocks = model.partition().blocks;
  const auto levels = static_cast<std::size_t>(cfg.i_max) + 1;

  // Events 0..nd-1 are arrivals, nd.. are block clocks.
  std::vector<double> cumulative;
  double acc = 0.0;
  for (std::size_t d = 0; d < nd; ++d) cumulative.push_back(acc += model.lambda(d));
  for (std::size_t b = 0; b < blocks.size(); ++b) cumulative.push_back(acc += model.block_rate(b));
  const double total_rate = acc;

  Stream timing(splitmix64(seed));
  Stream ties(splitmix64(seed ^ 0x5851f42d4c957f2dULL));

  std::vector<int> x(ns, 0);
  std::vector<std::deque<double>> arrivals(ns);
  std::vector<long> at_least(levels, 0);  // at_least[i] = #{u : x(u) >= i}, i >= 1
  long total = 0;

  RawRun run;
  Batches& out = run.batches;
  const double start = cfg.burn_in * cfg.horizon;
  const double width = (cfg.horizon - start) / cfg.batches;
  out.occupancy.assign(static_cast<std::size_t>(cfg.batches), std::vector<double>(levels, 0.0));
  out.total.assign(static_cast<std::size_t>(cfg.batches), 0.0);
  out.beyond.assign(static_cast<std::size_t>(cfg.batches), 0.0);
  out.server.assign(static_cast<std::size_t>(cfg.batches), std::vector<double>(ns, 0.0));
  out.sojourn.assign(static_cast<std::size_t>(cfg.batches), 0.0);
  std::vector<std::uint64_t> departed(static_cast<std::size_t>(cfg.batches), 0);

  int batch = -1;  // -1 during burn-in
  double boundary = start;
  double now = 0.0;

  auto add_segment = [&](double dt) {
    const auto k = static_cast<std::size_t>(batch);
    long counted = 0;
    for (std::size_t i = 1; i < levels; ++i) {
      out.occupancy[k][i] += dt * static_cast<double>(at_least[i]);
      counted += at_least[i];
    }
    out.total[k] += dt * static_cast<double>(total);
    out.beyond[k] += dt * static_cast<double>(total - counted);
    for (std::size_t u = 0; u < ns; ++u) out.server[k][u] += dt * x[u];
  };
  auto accumulate_to = [&](double t) {
    while (t >= boundary && batch < cfg.batches) {
      if (batch >= 0) add_segment(boundary - now);
      now = boundary;
      ++batch;
      boundary = start + width * (batch + 1);
    }
    if (batch >= 0 && batch < cfg.batches) add_segment(t - now);
    now = t;
  };

  std::vector<std::size_t> minimizers;
  while (true) {
    const double t = now + timing.exponential(total_rate);
    if (t >= cfg.horizon) {
      accumulate_to(cfg.horizon);
      break;
    }
    accumulate_to(t);
    const double pick = timing.uniform() * total_rate;
    const auto e = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
                                     cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    ++run.events;
    if (e < nd) {
      minimizers.clear();
      int shortest = std::numeric_limits<int>::max();
      for (std::size_t u : g.dispatcher_neighbors(e)) {
        if (x[u] < shortest) {
          shortest = x[u];
          minimizers.clear();
        }
        if (x[u] == shortest) minimizers.push_back(u);
      }
      const std::size_t u =
          minimizers.size() == 1 ? minimizers.front() : minimizers[ties.index(minimizers.size())];
      ++x[u];
      ++total;
      if (static_cast<std::size_t>(x[u]) < levels) ++at_least[static_cast<std::size_t>(x[u])];
      arrivals[u].push_back(t);
      if (static_cast<double>(total) > cfg.divergence_guard) {
        run.aborted = true;
        run.abort_time = t;
        run.abort_total = static_cast<double>(total);
        return run;
      }
    } else {
      for (std::size_t u : blocks[e - nd]) {
        if (x[u] == 0) continue;
        if (static_cast<std::size_t>(x[u]) < levels) --at_least[static_cast<std::size_t>(x[u])];
        --x[u];
        --total;
        const double arrived = arrivals[u].front();
        arrivals[u].pop_front();
        if (batch >= 0 && batch < cfg.batches) {
          out.sojourn[static_cast<std::size_t>(batch)] += t - arrived;
          ++departed[static_cast<std::size_t>(batch)];
          ++run.departures_measured;
        }
      }
    }
  }

  const auto denom = static_cast<double>(ns);
  for (std::size_t k = 0; k < out.total.size(); ++k) {
    for (double& v : out.occupancy[k]) v /= width * denom;
    out.occupancy[k][0] = 1.0;
    out.total[k] /= width;
    out.beyond[k] /= width * denom;
    for (double& v : out.server[k]) v /= width;
    out.sojourn[k] = departed[k] > 0 ? out.sojourn[k] / static_cast<double>(departed[k])
                                     : std::numeric_limits<double>::quiet_NaN();
  }
  return run;
}

SimResult merge(const NetworkModel& model, const SimConfig& config, std::vector<RawRun>& runs) {
  SimResult r;
  r.replications = runs.size();
  for (const auto& run : runs) {
    r.events += run.events;
    r.departures_measured += run.departures_measured;
    if (run.aborted && !r.aborted_unstable) {
      r.aborted_unstable = true;
      r.abort_time = run.abort_time;
      r.abort_total_tasks = run.abort_total;
      r.growth_rate = run.abort_total / run.abort_time;
    }
  }
  if (r.aborted_unstable) return r;
  Batches pooled;
  for (auto& run : runs) {
    auto& b = run.batches;
    pooled.occupancy.insert(pooled.occupancy.end(), b.occupancy.begin(), b.occupancy.end());
    pooled.total.insert(pooled.total.end(), b.total.begin(), b.total.end());
    pooled.beyond.insert(pooled.beyond.end(), b.beyond.begin(), b.beyond.end());
    pooled.server.insert(pooled.server.end(), b.server.begin(), b.server.end());
    pooled.sojourn.insert(pooled.sojourn.end(), b.sojourn.begin(), b.sojourn.end());
  }
  summarize(pooled, model.graph().num_servers(), config.i_max, config.confidence, r);
  return r;
}

}  // namespace

void SimConfig::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive");
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw DomainError("burn_in must lie in [0, 1)");
  if (batches < 2) throw DomainError("at least two batches are needed");
  if (i_max < 1) throw DomainError("i_max must be at least 1");
  if (!(divergence_guard > 0.0)) throw DomainError("divergence_guard must be positive");
  if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("confidence must lie in (0, 1)");
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t k) {
  if (k == 0) return seed;
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(k)));
}

SimResult simulate(const NetworkModel& model, const SimConfig& config) {
  return estimate_occupancy(model, config, 1, 1);
}

SimResult estimate_occupancy(const NetworkModel& model, const SimConfig& config,
                             std::size_t replications, unsigned threads) {
  config.validate();
  if (replications < 1) throw DomainError("at least one replication is needed");
  std::vector<RawRun> runs(replications);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, replications));
  if (threads <= 1) {
    for (std::size_t k = 0; k < replications; ++k) {
      runs[k] = run_once(model, config, replication_seed(config.seed, k));
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k; (k = next++) < replications;) {
          runs[k] = run_once(model, config, replication_seed(config.seed, k));
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return merge(model, config, runs);
}

CouplingReport coupled_prop1_run(int s, double rho, double horizon, std::uint64_t seed,
                                 std::uint64_t max_events) {
  if (s < 1) throw DomainError("s must be positive");
  if (!(rho > 0.0) || !(rho < s)) throw DomainError("rho must lie in (0, s)");
  Stream timing(splitmix64(seed));
  Stream ties(splitmix64(seed ^ 0x5851f42d4c957f2dULL));
  const double rate = rho + s;
  std::vector<long> x(static_cast<std::size_t>(s), 0);
  std::vector<std::size_t> minimizers;
  long sum = 0, y = 0;
  CouplingReport rep;
  double t = 0.0;
  while (rep.events < max_events) {
    t += timing.exponential(rate);
    if (t >= horizon) break;
    if (timing.uniform() * rate < rho) {
      minimizers.clear();
      long shortest = std::numeric_limits<long>::max();
      for (std::size_t u = 0; u < x.size(); ++u) {
        if (x[u] < shortest) {
          shortest = x[u];
          minimizers.clear();
        }
        if (x[u] == shortest) minimizers.push_back(u);
      }
      ++x[minimizers.size() == 1 ? minimizers.front() : minimizers[ties.index(minimizers.size())]];
      ++sum;
      ++y;
    } else {
      const std::size_t u = timing.index(x.size());
      if (x[u] > 0) {
        --x[u];
        --sum;
      }
      if (y > 0) --y;
    }
    ++rep.events;
    if (sum < y) ++rep.violations;
    if (sum == y) ++rep.equalities;
  }
  rep.final_time = std::min(t, horizon);
  rep.final_total = sum;
  rep.final_fast = y;
  return rep;
}

LittleReport little_check(const SimResult& result, const NetworkModel& model) {
  if (result.aborted_unstable) throw DomainError("little_check needs a run that did not abort");
  LittleReport rep;
  const auto ns = static_cast<double>(model.graph().num_servers());
  double levels = result.beyond_i_max;
  for (std::size_t i = 1; i < result.occupancy.values.size(); ++i) levels += result.occupancy.values[i];
  rep.identity_gap = std::abs(result.mean_total_tasks - ns * levels);
  rep.identity_ok = rep.identity_gap <= 1e-9 * std::max(1.0, result.mean_total_tasks);
  rep.lambda_total = model.total_arrival_rate();
  rep.l = result.mean_total_tasks;
  rep.lambda_w = rep.lambda_total * result.mean_sojourn;
  rep.tolerance = result.total_tasks_half_width + rep.lambda_total * result.sojourn_half_width;
  rep.little_ok = std::abs(rep.l - rep.lambda_w) <= rep.tolerance;
  return rep;
}

}  // namespace flexnet
