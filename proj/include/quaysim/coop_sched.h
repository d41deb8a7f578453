#ifndef QUAYSIM_COOP_SCHED_H_
#define QUAYSIM_COOP_SCHED_H_

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "quaysim/batch.h"
#include "quaysim/core_types.h"
#include "quaysim/nf_state.h"
#include "quaysim/packet_plane.h"
#include "quaysim/rng.h"

namespace quaysim {

class SchedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class SGroupState { kDetached, kAttached, kDraining };

const char* sgroup_state_name(SGroupState s);

struct NfTask {
  int nf_index = 0;
  NfProfile profile;
  NfStateManager state;
};

// One deployed chain instance as the cooperative scheduler sees it.
struct SGroup {
  int instance = -1;
  int logical_chain = -1;
  int worker = -1;
  std::vector<NfTask> tasks;  // task i is the chain's i-th NF
  SGroupState state = SGroupState::kDetached;
  std::optional<int> core;
  int batch_multiplier = 1;  // B_v
  bool active = false;       // set by ingress assignment
  bool faulted = false;      // terminated by the yield watchdog

  static SGroup from_chain(int instance, int logical_chain, int worker, const ChainSpec& spec);
  int length() const { return static_cast<int>(tasks.size()); }
  bool scheduled() const { return state != SGroupState::kDetached; }
};

struct TaskRef {
  int instance = -1;
  int nf_index = 0;
  bool operator==(const TaskRef&) const = default;
};

struct BatchRecord {
  std::uint64_t round_id = 0;
  int chain_id = 0;
  int instance = -1;
  int core_id = -1;
  TimeNs start;
  TimeNs end;
  int packets = 0;
  int dma_batches = 0;
  int copies = 0;
  int ctx_switches = 0;
  Cycles busy_cycles;
  Cycles copy_cycles;
  Cycles service_cycles;
  Cycles ctx_cycles;
  Cycles overhead_cycles;  // per-hop + warm-up
  TimeNs stall;            // waiting on remote state, not busy
};

// round_id,chain_id,core_id,start_ns,end_ns,packets,copies,ctx_switches,busy_cycles
void write_trace_csv(std::ostream& os, const std::vector<BatchRecord>& rounds);

struct Departure {
  PacketRec packet;
  TimeNs at;
};

struct StuckTask {
  TaskRef task;
  TimeNs started;
};

struct BatchRound {
  BatchRecord record;
  std::vector<Departure> departures;   // in transmit order
  std::vector<RemoteFetch> fetches;    // remote state fetches issued
  std::optional<StuckTask> stuck;      // an NF that never yielded
  std::vector<PacketRec> held;         // packets held by a stuck round
};

struct RoundContext {
  NicVfQueue& vf;
  ChainPacketBuffer& buffer;
  OwnershipLedger& ledger;
  const CostConstants& costs;
  std::int64_t freq_hz;
  int max_batch;
  const StateStoreModel& store;
  Rng& rng;
  std::uint64_t round_id = 0;
  int chain_id = 0;
};

enum class TimeoutVerdict { kOk, kTerminated };

// Cooperative FIFO scheduler of one dedicated core. Registered sgroups sit in
// the wait queue; attaching moves the chain's tasks to the run queue in chain
// order; each task runs its whole batch loop and yields to the next.
class CoreScheduler {
 public:
  explicit CoreScheduler(int core_id) : core_id_(core_id) {}

  void register_sgroup(const SGroup& sg);
  void unregister_sgroup(const SGroup& sg);
  bool is_registered(int instance) const;

  void attach_sgroup(SGroup& sg);
  // True when the sgroup is detached at once; false when it is left Draining
  // until the batch round in progress completes.
  bool detach_sgroup(SGroup& sg);

  // Runs one round for the attached sgroup starting at `now`: the first NF
  // pulls up to B_v DMA batches, copies them into the chain buffer when the
  // chain has more than one NF, then every task processes the whole batch in
  // run-queue order with one context switch after each task.
  BatchRound execute_batch_round(SGroup& sg, RoundContext& ctx, TimeNs now);
  // Completes the round in progress; a Draining sgroup becomes Detached.
  void finish_round(SGroup& sg);

  TimeoutVerdict timeout_check(SGroup& sg, const TaskRef& task, TimeNs elapsed,
                               TimeNs yield_timeout);

  int id() const { return core_id_; }
  std::optional<int> attached() const { return attached_; }
  bool idle() const { return !attached_.has_value(); }
  bool in_round() const { return in_round_; }
  const std::deque<TaskRef>& run_queue() const { return run_queue_; }
  const std::vector<TaskRef>& wait_queue() const { return wait_queue_; }
  std::size_t registered_count() const;
  Cycles busy_cycles() const { return busy_; }
  std::uint64_t rounds() const { return rounds_; }
  std::uint64_t ctx_switches() const { return ctx_switches_; }

  // Test hook emulating a broken scheduler: swaps two run-queue slots.
  void debug_swap_run_queue(std::size_t a, std::size_t b);

 private:
  void move_to_wait_queue(SGroup& sg);

  int core_id_;
  std::deque<TaskRef> run_queue_;
  std::vector<TaskRef> wait_queue_;
  std::optional<int> attached_;
  bool in_round_ = false;
  Cycles busy_;
  std::uint64_t rounds_ = 0;
  std::uint64_t ctx_switches_ = 0;
};

struct Worker {
  WorkerSpec spec;
  std::vector<CoreScheduler> cores;
  std::vector<int> instances;  // registered sgroups, by instance id

  explicit Worker(const WorkerSpec& s);
  std::optional<int> pick_idle_core() const;
  int attached_cores() const;
  // Core whose wait queue holds the instance, if any.
  std::optional<int> registration_core(int instance) const;
  // Core with the fewest registered sgroups (lowest id on ties).
  int least_registered_core() const;
};

// Attaches sg to `core`, re-registering it there first if it waits elsewhere.
void attach_sgroup_to_core(Worker& w, SGroup& sg, int core);

// Per-NF per-packet cycles as the simulator charges them for packets of
// `packet_size` bytes: the first NF carries the copy (N >= 2) and warm-up,
// downstream NFs carry the per-hop overhead.
ChainCostSummary effective_chain_costs(const ChainSpec& chain, const CostConstants& costs,
                                       int packet_size);

// Context-switch cycles per round as charged: N * T_ctx for N >= 2, none for N = 1.
double effective_t_ctx(int chain_length, const CostConstants& costs);

}  // namespace quaysim

#endif  // QUAYSIM_COOP_SCHED_H_
