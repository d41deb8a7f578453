#ifndef QUAYSIM_NF_STATE_H_
#define QUAYSIM_NF_STATE_H_

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "quaysim/core_types.h"
#include "quaysim/rng.h"

namespace quaysim {

using StateValue = std::uint64_t;

// Local per-NF flow table. Writes mark the flow dirty until the next sync.
class FlowStateTable {
 public:
  void update(const FlowKey& flow, StateValue val);
  std::optional<StateValue> lookup(const FlowKey& flow) const;
  // Inserts a value pulled from the remote store; never overwrites a local write.
  void install_fetched(const FlowKey& flow, StateValue val);
  // Empties the dirty set, returning how many flows were flushed.
  std::size_t flush_dirty();

  bool contains(const FlowKey& flow) const { return entries_.count(flow) != 0; }
  std::size_t size() const { return entries_.size(); }
  const std::unordered_set<FlowKey, FlowKeyHash>& dirty() const { return dirty_; }

 private:
  std::unordered_map<FlowKey, StateValue, FlowKeyHash> entries_;
  std::unordered_set<FlowKey, FlowKeyHash> dirty_;
};

// Remote global-state store: only its latency is modeled.
struct StateStoreModel {
  TimeNs latency_min = micros(310);
  TimeNs latency_max = micros(310);
  TimeNs sync_period = millis(100);

  static StateStoreModel from(const StateConfig& c) {
    return {c.remote_latency_min, c.remote_latency_max, c.sync_period};
  }
  TimeNs sample_latency(Rng& rng) const;
};

struct RemoteFetch {
  FlowKey flow;
  TimeNs issued_at;
  TimeNs done_at;
};

struct StateReadResult {
  std::optional<StateValue> value;     // set on a local hit
  std::optional<RemoteFetch> fetch;    // set when this read issued a new fetch
  TimeNs ready_at;                     // when the value is usable by the caller
};

struct SyncEvent {
  TimeNs at;
  std::size_t flushed = 0;
  TimeNs round_trip;  // charged to the background, never to packets
};

// One NF task's view of its state: the local table plus in-flight remote
// fetches. A flow with a pending fetch is never fetched twice.
class NfStateManager {
 public:
  void update(const FlowKey& flow, StateValue val) { table_.update(flow, val); }
  StateReadResult read(const FlowKey& flow, TimeNs now, const StateStoreModel& model, Rng& rng);
  // Completion of a remote fetch issued by read().
  void complete_fetch(const FlowKey& flow, StateValue fetched = 0);
  SyncEvent periodic_sync(TimeNs now, const StateStoreModel& model, Rng& rng);

  const FlowStateTable& table() const { return table_; }
  std::uint64_t misses() const { return misses_; }
  std::uint64_t fetches() const { return fetches_; }
  std::uint64_t syncs() const { return syncs_; }
  std::size_t pending_fetches() const { return pending_.size(); }
  bool fetch_pending(const FlowKey& flow) const { return pending_.count(flow) != 0; }

 private:
  FlowStateTable table_;
  std::unordered_map<FlowKey, TimeNs, FlowKeyHash> pending_;
  std::uint64_t misses_ = 0;
  std::uint64_t fetches_ = 0;
  std::uint64_t syncs_ = 0;
};

// Times of the periodic sync events in (0, duration]: one per multiple of period.
std::vector<TimeNs> sync_schedule(TimeNs period, TimeNs duration);

}  // namespace quaysim

#endif  // QUAYSIM_NF_STATE_H_
