#include "quaysim/nf_state.h"

#include <algorithm>
#include <stdexcept>

namespace quaysim {

void FlowStateTable::update(const FlowKey& flow, StateValue val) {
  entries_[flow] = val;
  dirty_.insert(flow);
}

std::optional<StateValue> FlowStateTable::lookup(const FlowKey& flow) const {
  auto it = entries_.find(flow);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FlowStateTable::install_fetched(const FlowKey& flow, StateValue val) {
  entries_.try_emplace(flow, val);
}

std::size_t FlowStateTable::flush_dirty() {
  const std::size_t n = dirty_.size();
  dirty_.clear();
  return n;
}

TimeNs StateStoreModel::sample_latency(Rng& rng) const {
  if (latency_max <= latency_min) return latency_min;
  return {rng.uniform_int(latency_min.value, latency_max.value)};
}

StateReadResult NfStateManager::read(const FlowKey& flow, TimeNs now,
                                     const StateStoreModel& model, Rng& rng) {
  StateReadResult r;
  if (auto v = table_.lookup(flow)) {
    r.value = v;
    r.ready_at = now;
    return r;
  }
  if (auto it = pending_.find(flow); it != pending_.end()) {
    r.ready_at = std::max(it->second, now);
    return r;
  }
  ++misses_;
  ++fetches_;
  const TimeNs done = now + model.sample_latency(rng);
  pending_.emplace(flow, done);
  r.fetch = RemoteFetch{flow, now, done};
  r.ready_at = done;
  return r;
}

void NfStateManager::complete_fetch(const FlowKey& flow, StateValue fetched) {
  if (pending_.erase(flow) == 0) {
    throw std::logic_error("complete_fetch: no fetch pending for " + flow.to_string());
  }
  table_.install_fetched(flow, fetched);
}

SyncEvent NfStateManager::periodic_sync(TimeNs now, const StateStoreModel& model, Rng& rng) {
  if (model.sync_period.value <= 0) throw std::invalid_argument("periodic_sync: sync disabled");
  ++syncs_;
  SyncEvent ev;
  ev.at = now;
  ev.flushed = table_.flush_dirty();
  ev.round_trip = ev.flushed > 0 ? model.sample_latency(rng) : TimeNs{};
  return ev;
}

std::vector<TimeNs> sync_schedule(TimeNs period, TimeNs duration) {
  std::vector<TimeNs> out;
  if (period.value <= 0) return out;
  for (TimeNs t = period; t <= duration; t += period) out.push_back(t);
  return out;
}

}  // namespace quaysim
