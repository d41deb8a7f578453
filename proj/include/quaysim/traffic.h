#ifndef QUAYSIM_TRAFFIC_H_
#define QUAYSIM_TRAFFIC_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "quaysim/core_types.h"
#include "quaysim/rng.h"

namespace quaysim {

struct SizeWeight {
  int size_bytes = 1024;
  double weight = 1.0;

  bool operator==(const SizeWeight&) const = default;
};

// Destination block new flows are drawn from, weighted.
struct DstBlock {
  std::uint32_t prefix = 0;
  int len = 0;
  double weight = 1.0;

  bool operator==(const DstBlock&) const = default;
};

// A flow given explicitly rather than sampled.
struct StaticFlow {
  std::optional<FlowKey> key;  // sampled when unset
  TimeNs start;
  TimeNs duration = seconds(3600);
  double pps = 1000.0;
  int size_bytes = 1024;

  bool operator==(const StaticFlow&) const = default;
};

struct TrafficModel {
  double flow_rate = 0.0;  // flows/s once the ramp completes
  TimeNs ramp;             // linear ramp of the flow arrival rate from 0
  TimeNs flow_duration_mean = seconds(60);
  TimeNs flow_duration_min = millis(100);
  double pps_min = 1000.0;  // per-flow packet rate, uniform in [min, max]
  double pps_max = 1000.0;
  std::vector<SizeWeight> sizes{{1024, 1.0}};
  std::vector<DstBlock> dst_blocks;  // empty: any destination
  std::uint8_t proto = 6;
  std::uint64_t packet_budget = 0;  // 0: unlimited
  std::vector<StaticFlow> static_flows;

  bool operator==(const TrafficModel&) const = default;
};

// Throws std::invalid_argument on negative rates, empty or invalid sizes.
void check_traffic_model(const TrafficModel& m);

// Size with at least half the total weight at or below it.
int median_packet_size(const TrafficModel& m);
double mean_pps(const TrafficModel& m);

struct FlowSpec {
  std::uint64_t id = 0;
  FlowKey key;
  TimeNs start;
  TimeNs duration;
  double pps = 0.0;
  int size_bytes = 1024;
  TimeNs gap;  // deterministic inter-packet gap

  TimeNs end() const { return start + duration; }
};

TimeNs packet_gap(double pps);

// Lazily produces the flows of a model in start-time order. Sampled flows
// arrive by a Poisson process whose rate ramps linearly from 0 to flow_rate
// over the ramp (generated by thinning); static flows are merged in.
class TrafficGenerator {
 public:
  TrafficGenerator(const TrafficModel& model, std::uint64_t seed, TimeNs horizon);

  // Next flow starting before the horizon, or nullopt.
  std::optional<FlowSpec> next_flow();

  // Arrival rate (flows/s) of the sampled process at time t.
  double arrival_rate(TimeNs t) const;

 private:
  FlowSpec sample_flow(TimeNs start);
  FlowKey sample_key();
  int sample_size();
  void advance_poisson();

  TrafficModel model_;
  TimeNs horizon_;
  Rng arrivals_;
  Rng attrs_;
  std::optional<TimeNs> next_poisson_;
  std::vector<FlowSpec> statics_;  // sorted by start
  std::size_t static_pos_ = 0;
  double poisson_clock_s_ = 0.0;
  std::uint64_t next_id_ = 0;
};

// Flows alive at time t (start <= t < end) among `flows`.
std::size_t concurrent_flows(const std::vector<FlowSpec>& flows, TimeNs t);

}  // namespace quaysim

#endif  // QUAYSIM_TRAFFIC_H_
