#include "quaysim/profiler.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "quaysim/batch.h"

namespace quaysim {
namespace {

// Threshold above the load clamp, so the one instance takes every flow.
constexpr double kUnboundedThreshold = 2.0;

ClusterSpec single_core_cluster(const ClusterSpec& cluster, const ChainSpec& chain,
                                int batch_multiplier) {
  ClusterSpec c = cluster;
  WorkerSpec w = cluster.workers.front();
  w.num_cores = 1;
  c.workers = {w};
  ChainSpec ch = chain;
  ch.filter = TrafficFilter{};
  ch.load_threshold = kUnboundedThreshold;
  ch.batch_multiplier = batch_multiplier;
  c.chains = {ch};
  c.scaling.install_latency = TimeNs{0};
  c.scaling.idle_window = seconds(3600);
  return c;
}

int sample_size(const std::vector<SizeWeight>& sizes, Rng& rng) {
  double total = 0.0;
  for (const auto& s : sizes) total += s.weight;
  double x = rng.uniform() * total;
  for (const auto& s : sizes) {
    if (x < s.weight) return s.size_bytes;
    x -= s.weight;
  }
  return sizes.back().size_bytes;
}

}  // namespace

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t t = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1));
  if (t == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < t; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double measure_capacity(const ClusterSpec& cluster, const ChainSpec& chain, int batch_multiplier,
                        int packet_size, std::uint64_t seed, TimeNs warmup, TimeNs hold) {
  Scenario s;
  s.cluster = single_core_cluster(cluster, chain, batch_multiplier);
  const auto costs = effective_chain_costs(chain, cluster.costs, packet_size);
  const double ideal = ideal_rate(costs, cluster.workers.front().freq_hz);
  StaticFlow f;
  f.start = TimeNs{0};
  f.duration = warmup + hold;
  f.pps = 2.0 * ideal;
  f.size_bytes = packet_size;
  s.traffic.static_flows = {f};
  s.duration = warmup + hold;
  s.measure_from = warmup;
  s.drain_limit = millis(50);
  s.seed = seed;
  ResolvedChain r;
  r.threshold = kUnboundedThreshold;
  r.max_rate = ideal;
  r.batch_multiplier = batch_multiplier;
  const RunResult res = run_scenario(s, {r});
  return res.report.chains.front().rate_pps;
}

Scenario profile_scenario(const ClusterSpec& cluster, const ChainSpec& chain,
                          const TrafficModel& traffic, int batch_multiplier, double max_rate,
                          double threshold_pct, TimeNs warmup, TimeNs hold, std::uint64_t seed) {
  if (!(max_rate > 0.0)) throw std::invalid_argument("profile: max_rate must be positive");
  check_traffic_model(traffic);
  Scenario s;
  s.cluster = single_core_cluster(cluster, chain, batch_multiplier);
  s.duration = warmup + hold;
  s.measure_from = warmup;
  s.drain_limit = millis(50);
  s.seed = seed;
  s.traffic.sizes = traffic.sizes;
  Rng rng(derive_seed(seed, 77));
  const double target = threshold_pct / 100.0 * max_rate;
  double offered = 0.0;
  while (offered < target) {
    StaticFlow f;
    f.pps = traffic.pps_min == traffic.pps_max ? traffic.pps_min
                                               : rng.uniform(traffic.pps_min, traffic.pps_max);
    f.size_bytes = sample_size(traffic.sizes, rng);
    f.start = TimeNs{static_cast<std::int64_t>(rng.uniform() * static_cast<double>(packet_gap(f.pps).value))};
    f.duration = s.duration;
    s.traffic.static_flows.push_back(f);
    offered += f.pps;
  }
  return s;
}

ProfileRow profile_point(const ClusterSpec& cluster, const ChainSpec& chain,
                         const TrafficModel& traffic, int batch_multiplier, double max_rate,
                         double threshold_pct, TimeNs warmup, TimeNs hold, std::uint64_t seed) {
  const Scenario s = profile_scenario(cluster, chain, traffic, batch_multiplier, max_rate,
                                      threshold_pct, warmup, hold, seed);
  ResolvedChain r;
  r.threshold = kUnboundedThreshold;
  r.max_rate = max_rate;
  r.batch_multiplier = batch_multiplier;
  const RunResult res = run_scenario(s, {r});
  const ChainMetrics& m = res.report.chains.front();
  return ProfileRow{threshold_pct, m.latency.p99, m.max_queue_len, m.rate_pps};
}

ProfileCurve profile_chain(const ClusterSpec& cluster, const ChainSpec& chain,
                           const TrafficModel& traffic, int batch_multiplier, double max_rate,
                           std::uint64_t seed, int threads) {
  std::vector<double> thresholds = cluster.profile.thresholds_pct;
  if (thresholds.empty()) thresholds = default_profile_thresholds();
  ProfileCurve curve;
  curve.rows.resize(thresholds.size());
  parallel_for(thresholds.size(), threads, [&](std::size_t i) {
    curve.rows[i] = profile_point(cluster, chain, traffic, batch_multiplier, max_rate, thresholds[i],
                                  cluster.profile.warmup, cluster.profile.hold, seed);
  });
  curve.check();
  return curve;
}

}  // namespace quaysim
