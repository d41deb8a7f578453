#ifndef QUAYSIM_ENGINE_H_
#define QUAYSIM_ENGINE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quaysim/controller.h"
#include "quaysim/coop_sched.h"
#include "quaysim/core_types.h"
#include "quaysim/ingress.h"
#include "quaysim/metrics.h"
#include "quaysim/packet_plane.h"
#include "quaysim/traffic.h"

namespace quaysim {

enum class EventKind : std::uint8_t {
  kFlowArrival,
  kPacketArrival,
  kRuleInstalled,
  kBatchRound,
  kMonitorTick,
  kLoopStep,
  kSyncTick,
  kFlowEnd,
  kRemoteFetchDone,
  kTimeoutCheck,
};

const char* event_kind_name(EventKind k);

struct OutputOptions {
  bool keep_rounds = false;      // per-round BatchRecords
  bool ledger_log = false;       // full ownership-ledger access log
  bool keep_event_times = false; // (time, sequence) of every processed event
  bool keep_flow_departures = false;

  bool operator==(const OutputOptions&) const = default;
};

struct Scenario {
  ClusterSpec cluster;
  TrafficModel traffic;
  TimeNs duration = seconds(10);   // traffic horizon
  TimeNs drain_limit = seconds(1);
  TimeNs measure_from;             // latency/queue stats ignore earlier arrivals
  std::uint64_t seed = 1;
  OutputOptions output;

  bool operator==(const Scenario&) const = default;
};

struct CoreEvent {
  TimeNs at;
  int worker = 0;
  int core = 0;
  int instance = -1;
  int chain = -1;
  bool attach = true;
  int attached_total = 0;  // attached cores cluster-wide after the event
};

// Deployment parameters a chain runs with.
struct ResolvedChain {
  double threshold = 1.0;
  double max_rate = 1.0;
  int batch_multiplier = 1;
  bool feasible = true;
  std::optional<ProfileCurve> curve;
};

struct RunResult {
  MetricsReport report;
  std::vector<ResolvedChain> resolved;
  std::vector<BatchRecord> rounds;         // when keep_rounds
  std::vector<CoreEvent> core_trace;
  std::vector<PoolSample> pool_trace;
  std::vector<Assignment> assignments;
  std::vector<Fault> faults;
  std::vector<std::pair<TimeNs, std::uint64_t>> event_times;  // when keep_event_times
  // (flow id, packet id) in departure order; when keep_flow_departures
  std::vector<std::pair<std::uint64_t, std::uint64_t>> flow_departures;
  OwnershipLedger ledger;
  FlowTable flow_table;
};

// Throws std::invalid_argument when the scenario does not validate.
void check_scenario(const Scenario& s);

// Batch multiplier for a chain: the configured one, else the smallest B_v
// keeping the rate within batch_ratio of ideal at full DMA batches.
int resolve_batch_multiplier(const ClusterSpec& cluster, const ChainSpec& chain,
                             const TrafficModel& traffic);

// Fills in threshold, max_rate and batch multiplier for every chain,
// profiling the chain when they are not configured.
std::vector<ResolvedChain> resolve_chains(const Scenario& s, int threads = 1);

// Runs the scenario to completion: traffic until the horizon or packet
// budget, then drain until every queue is empty or drain_limit passes.
// Throws ConservationError if the packet accounting does not balance.
RunResult run_scenario(const Scenario& s, int threads = 1);
// Same, with chain parameters already resolved.
RunResult run_scenario(const Scenario& s, const std::vector<ResolvedChain>& resolved);

}  // namespace quaysim

#endif  // QUAYSIM_ENGINE_H_
