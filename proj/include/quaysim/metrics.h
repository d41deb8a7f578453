#ifndef QUAYSIM_METRICS_H_
#define QUAYSIM_METRICS_H_

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quaysim/core_types.h"

namespace quaysim {

// Nearest-rank percentile: the ceil(q/100 * n)-th smallest value. `sorted`
// must be ascending; returns 0 for an empty sample.
std::int64_t percentile_nearest_rank(const std::vector<std::int64_t>& sorted, double q);

struct LatencySummary {
  std::uint64_t count = 0;
  TimeNs p50;
  TimeNs p99;
  TimeNs p999;
  TimeNs max;
  double mean_ns = 0.0;
};

// Sorts `latencies_ns` in place and summarizes it.
LatencySummary summarize_latencies(std::vector<std::int64_t>& latencies_ns);

struct ChainMetrics {
  int chain_id = 0;
  std::string name;
  double threshold = 0.0;
  double max_rate_pps = 0.0;
  int batch_multiplier = 1;
  bool threshold_feasible = true;
  std::uint64_t injected = 0;
  std::uint64_t processed = 0;
  std::uint64_t dropped = 0;
  LatencySummary latency;
  std::uint64_t copies = 0;
  std::uint64_t first_nf_packets = 0;
  std::uint64_t ctx_switches = 0;
  std::uint64_t rounds = 0;
  double avg_cores = 0.0;
  int max_cores = 0;
  int peak_instances = 0;
  int max_queue_len = 0;
  double rate_pps = 0.0;  // processed in the measured window / window length
};

struct MetricsReport {
  std::uint64_t seed = 0;
  TimeNs traffic_end;
  TimeNs sim_end;
  std::uint64_t flows = 0;
  std::uint64_t injected = 0;
  std::uint64_t processed = 0;
  std::uint64_t dropped_vf = 0;
  std::uint64_t dropped_rejected = 0;
  std::uint64_t dropped_timeout = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t bypass = 0;
  LatencySummary latency;
  std::uint64_t copies = 0;
  std::uint64_t ctx_switches = 0;
  std::uint64_t rounds = 0;
  double avg_cores = 0.0;
  int max_cores = 0;
  int max_queue_len = 0;
  std::uint64_t monitor_accepted = 0;
  std::uint64_t monitor_suppressed = 0;
  std::uint64_t violations = 0;
  std::map<std::string, std::uint64_t> violations_by_kind;
  std::uint64_t order_violations = 0;
  std::map<std::string, std::uint64_t> faults;
  std::uint64_t rule_installs = 0;
  std::uint64_t state_fetches = 0;
  std::uint64_t state_syncs = 0;
  std::vector<ChainMetrics> chains;

  std::uint64_t dropped() const { return dropped_vf + dropped_rejected + dropped_timeout; }
  // dropped / (injected - bypass); 0 when nothing entered the NFV path.
  double loss_rate() const;
  bool conserved() const { return injected == processed + dropped() + in_flight + bypass; }
};

class ConservationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ConservationError when the packet accounting does not balance.
void check_conservation(const MetricsReport& r);

void write_metrics_json(std::ostream& os, const MetricsReport& r);
// One row per chain plus an "all" row.
void write_metrics_csv(std::ostream& os, const MetricsReport& r);
// Human-readable per-chain table.
void write_summary_table(std::ostream& os, const MetricsReport& r);

// Shortest decimal text that reads back as the same double.
std::string format_number(double x);

// Microseconds with three decimals, as printed in tables.
std::string format_us(TimeNs t);

}  // namespace quaysim

#endif  // QUAYSIM_METRICS_H_
