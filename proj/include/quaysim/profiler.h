#ifndef QUAYSIM_PROFILER_H_
#define QUAYSIM_PROFILER_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "quaysim/controller.h"
#include "quaysim/core_types.h"
#include "quaysim/engine.h"
#include "quaysim/traffic.h"

namespace quaysim {

// Packets per second one instance of `chain` sustains on one core of the
// first worker when its queue never runs dry, for `packet_size`-byte packets.
double measure_capacity(const ClusterSpec& cluster, const ChainSpec& chain, int batch_multiplier,
                        int packet_size, std::uint64_t seed, TimeNs warmup = millis(20),
                        TimeNs hold = millis(100));

// The single-instance scenario behind one profile row: flows sampled from
// `traffic` are admitted until their offered rate reaches threshold_pct of
// max_rate, all pinned to one core.
Scenario profile_scenario(const ClusterSpec& cluster, const ChainSpec& chain,
                          const TrafficModel& traffic, int batch_multiplier, double max_rate,
                          double threshold_pct, TimeNs warmup, TimeNs hold, std::uint64_t seed);

ProfileRow profile_point(const ClusterSpec& cluster, const ChainSpec& chain,
                         const TrafficModel& traffic, int batch_multiplier, double max_rate,
                         double threshold_pct, TimeNs warmup, TimeNs hold, std::uint64_t seed);

// One row per threshold (cluster.profile.thresholds_pct, or 10..85 step 5).
// Every row uses the same seed, so a higher threshold admits a superset of
// the flows of a lower one. Rows run on up to `threads` threads.
ProfileCurve profile_chain(const ClusterSpec& cluster, const ChainSpec& chain,
                           const TrafficModel& traffic, int batch_multiplier, double max_rate,
                           std::uint64_t seed, int threads = 1);

// Runs fn(i) for i in [0, n) on up to `threads` threads.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace quaysim

#endif  // QUAYSIM_PROFILER_H_
