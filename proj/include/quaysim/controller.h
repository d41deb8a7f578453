#ifndef QUAYSIM_CONTROLLER_H_
#define QUAYSIM_CONTROLLER_H_

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "quaysim/coop_sched.h"
#include "quaysim/core_types.h"

namespace quaysim {

// What an instance's monitoring thread reports.
struct ChainStats {
  int instance = -1;
  double packet_rate = 0.0;  // pps, averaged over the monitor window
  int queue_len = 0;
  Cycles per_batch_exec;
  TimeNs last_report;
};

enum class StatsVerdict { kAccepted, kSuppressed };

// packet_rate / max_rate, clamped to [0, 1.5].
double chain_load(double packet_rate, double max_rate);

struct ProfileRow {
  double threshold_pct = 0.0;
  TimeNs p99;
  int max_qlen = 0;
  double rate_pps = 0.0;

  bool operator==(const ProfileRow&) const = default;
};

// Latency profile of one chain under increasing per-core load thresholds.
struct ProfileCurve {
  std::vector<ProfileRow> rows;

  // Throws std::invalid_argument unless thresholds strictly increase.
  void check() const;
  // Single-core capacity implied by the top row: rate / (threshold / 100).
  double max_rate() const;

  // threshold_pct,p99_ns,max_qlen,rate_pps
  void write_csv(std::ostream& os) const;
  static ProfileCurve read_csv(std::istream& is);
};

struct ThresholdChoice {
  double threshold_pct = 0.0;
  bool feasible = true;  // false: no row met the SLO, the lowest was returned
};

// Highest threshold whose p99 meets the SLO. Throws on an empty curve.
ThresholdChoice pick_load_threshold(const ProfileCurve& curve, TimeNs slo_p99);

// Runtime view of one logical chain: its active instances and idle pool.
struct LogicalChain {
  int index = 0;
  ChainSpec spec;
  double threshold = 1.0;  // load fraction above which an instance is overloaded
  double max_rate = 1.0;   // pps on one core
  std::vector<int> active;
  std::vector<int> idle;   // pre-deployed, detached, unassigned
};

struct DeployedInstance {
  int instance = -1;
  int worker = -1;
};

// Creates and removes chain instances on workers; implemented by the engine.
class InstanceDeployer {
 public:
  virtual ~InstanceDeployer() = default;
  // Registers a new detached sgroup for the logical chain; nullopt when no
  // worker has a free slot.
  virtual std::optional<DeployedInstance> deploy(int logical_chain) = 0;
  virtual void undeploy(int instance) = 0;
  virtual int worker_cores(int worker) const = 0;
};

struct PoolSample {
  TimeNs at;
  int logical_chain = 0;
  int idle = 0;
};

enum class FaultKind { kCapacity, kNoIdleCore, kScaleOutFailed, kYieldTimeout, kInfeasibleSlo };

const char* fault_name(FaultKind k);

struct Fault {
  TimeNs at;
  FaultKind kind;
  int subject = -1;  // instance, chain or worker depending on kind
};

class Controller {
 public:
  Controller(const ScalingConfig& scaling, const MonitorConfig& monitor, InstanceDeployer& deployer);

  int add_logical_chain(const ChainSpec& spec, double threshold, double max_rate);
  LogicalChain& chain(int index) { return chains_.at(static_cast<std::size_t>(index)); }
  const LogicalChain& chain(int index) const { return chains_.at(static_cast<std::size_t>(index)); }
  std::size_t chain_count() const { return chains_.size(); }

  // Monitoring filter: accepts a report iff its rate moved by at least
  // epsilon relative to the last accepted one, or the queue crossed the mark.
  StatsVerdict on_stats_update(const ChainStats& stats);
  double instance_load(int instance) const;
  double instance_rate(int instance) const;
  int instance_worker(int instance) const;
  int instance_chain(int instance) const;
  // Sum of active-instance loads on a worker over its core count.
  double worker_load(int worker) const;

  bool scale_out(int logical_chain, TimeNs now);
  bool scale_in(int logical_chain, TimeNs now);
  // The Listing-style pool loops: grow to scale_out_thresh, shrink to
  // scale_in_thresh, then record the idle-pool size.
  void maintain_pool(int logical_chain, TimeNs now);

  // Idle instance -> active (ingress picked it).
  void set_active(int instance);
  // Active instance went idle and was detached: back to the pool.
  void return_to_pool(int instance, TimeNs now);
  // Instance died (watchdog); it leaves every list.
  void retire(int instance);

  void record_fault(Fault f) { faults_.push_back(f); }
  const std::vector<Fault>& faults() const { return faults_; }
  const std::vector<PoolSample>& pool_trace() const { return pool_trace_; }
  std::uint64_t accepted_updates() const { return accepted_; }
  std::uint64_t suppressed_updates() const { return suppressed_; }
  const ScalingConfig& scaling() const { return scaling_; }

 private:
  struct InstanceView {
    int logical_chain = -1;
    int worker = -1;
    bool deployed = false;
    bool active = false;
    std::optional<ChainStats> last;
  };
  InstanceView& view(int instance);
  const InstanceView& view(int instance) const;

  ScalingConfig scaling_;
  MonitorConfig monitor_;
  InstanceDeployer& deployer_;
  std::vector<LogicalChain> chains_;
  std::map<int, InstanceView> instances_;
  std::vector<PoolSample> pool_trace_;
  std::vector<Fault> faults_;
  std::uint64_t accepted_ = 0;
  std::uint64_t suppressed_ = 0;
};

struct LoopStepResult {
  std::vector<std::pair<int, int>> attached;  // (instance, core)
  std::vector<int> detached;                  // detached immediately
  std::vector<int> draining;                  // detach pending batch end
  std::vector<int> deferred;                  // active but no idle core
  bool changed() const { return !attached.empty() || !detached.empty() || !draining.empty(); }
};

// One pass of the worker's scheduler loop: detach scheduled-but-inactive
// sgroups, attach active-but-unscheduled ones to idle cores.
LoopStepResult scheduler_loop_step(Worker& worker, std::vector<SGroup>& sgroups);

}  // namespace quaysim

#endif  // QUAYSIM_CONTROLLER_H_
