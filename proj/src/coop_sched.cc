#include "quaysim/coop_sched.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace quaysim {

const char* sgroup_state_name(SGroupState s) {
  switch (s) {
    case SGroupState::kDetached:
      return "detached";
    case SGroupState::kAttached:
      return "attached";
    case SGroupState::kDraining:
      return "draining";
  }
  return "unknown";
}

SGroup SGroup::from_chain(int instance, int logical_chain, int worker, const ChainSpec& spec) {
  SGroup sg;
  sg.instance = instance;
  sg.logical_chain = logical_chain;
  sg.worker = worker;
  for (std::size_t i = 0; i < spec.nfs.size(); ++i) {
    sg.tasks.push_back(NfTask{static_cast<int>(i), spec.nfs[i], {}});
  }
  return sg;
}

void write_trace_csv(std::ostream& os, const std::vector<BatchRecord>& rounds) {
  os << "round_id,chain_id,core_id,start_ns,end_ns,packets,copies,ctx_switches,busy_cycles\n";
  for (const auto& r : rounds) {
    os << r.round_id << ',' << r.chain_id << ',' << r.core_id << ',' << r.start.value << ','
       << r.end.value << ',' << r.packets << ',' << r.copies << ',' << r.ctx_switches << ','
       << r.busy_cycles.value << '\n';
  }
}

std::size_t CoreScheduler::registered_count() const {
  std::vector<int> ids;
  for (const auto& t : wait_queue_) ids.push_back(t.instance);
  for (const auto& t : run_queue_) ids.push_back(t.instance);
  std::sort(ids.begin(), ids.end());
  return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

bool CoreScheduler::is_registered(int instance) const {
  auto same = [instance](const TaskRef& t) { return t.instance == instance; };
  return std::any_of(wait_queue_.begin(), wait_queue_.end(), same) ||
         std::any_of(run_queue_.begin(), run_queue_.end(), same);
}

void CoreScheduler::register_sgroup(const SGroup& sg) {
  if (is_registered(sg.instance)) {
    throw SchedError("register_sgroup: instance " + std::to_string(sg.instance) +
                     " already registered on core " + std::to_string(core_id_));
  }
  if (sg.state != SGroupState::kDetached) {
    throw SchedError("register_sgroup: sgroup must be detached");
  }
  for (const auto& t : sg.tasks) wait_queue_.push_back({sg.instance, t.nf_index});
}

void CoreScheduler::unregister_sgroup(const SGroup& sg) {
  if (attached_ == sg.instance) throw SchedError("unregister_sgroup: sgroup is attached");
  const auto before = wait_queue_.size();
  std::erase_if(wait_queue_, [&](const TaskRef& t) { return t.instance == sg.instance; });
  if (wait_queue_.size() == before) throw SchedError("unregister_sgroup: not registered");
}

void CoreScheduler::attach_sgroup(SGroup& sg) {
  if (attached_) {
    throw SchedError("attach_sgroup: core " + std::to_string(core_id_) + " is busy with instance " +
                     std::to_string(*attached_));
  }
  if (sg.state != SGroupState::kDetached) throw SchedError("attach_sgroup: sgroup not detached");
  std::vector<TaskRef> mine;
  for (const auto& t : wait_queue_) {
    if (t.instance == sg.instance) mine.push_back(t);
  }
  if (mine.empty()) throw SchedError("attach_sgroup: sgroup not registered on this core");
  std::erase_if(wait_queue_, [&](const TaskRef& t) { return t.instance == sg.instance; });
  std::sort(mine.begin(), mine.end(),
            [](const TaskRef& a, const TaskRef& b) { return a.nf_index < b.nf_index; });
  run_queue_.assign(mine.begin(), mine.end());
  attached_ = sg.instance;
  sg.state = SGroupState::kAttached;
  sg.core = core_id_;
}

void CoreScheduler::move_to_wait_queue(SGroup& sg) {
  std::vector<TaskRef> mine(run_queue_.begin(), run_queue_.end());
  std::sort(mine.begin(), mine.end(),
            [](const TaskRef& a, const TaskRef& b) { return a.nf_index < b.nf_index; });
  wait_queue_.insert(wait_queue_.end(), mine.begin(), mine.end());
  run_queue_.clear();
  attached_.reset();
  sg.state = SGroupState::kDetached;
  sg.core.reset();
}

bool CoreScheduler::detach_sgroup(SGroup& sg) {
  if (sg.state == SGroupState::kDetached) throw SchedError("detach_sgroup: already detached");
  if (attached_ != sg.instance) throw SchedError("detach_sgroup: sgroup not attached here");
  if (in_round_) {
    sg.state = SGroupState::kDraining;
    return false;
  }
  move_to_wait_queue(sg);
  return true;
}

BatchRound CoreScheduler::execute_batch_round(SGroup& sg, RoundContext& ctx, TimeNs now) {
  if (attached_ != sg.instance || sg.state == SGroupState::kDetached) {
    throw SchedError("execute_batch_round: sgroup not attached to core " + std::to_string(core_id_));
  }
  if (in_round_) throw SchedError("execute_batch_round: round already in progress");

  BatchRound out;
  BatchRecord& rec = out.record;
  rec.round_id = ctx.round_id;
  rec.chain_id = ctx.chain_id;
  rec.instance = sg.instance;
  rec.core_id = core_id_;
  rec.start = now;

  std::vector<PacketRec> packets;
  for (int b = 0; b < sg.batch_multiplier; ++b) {
    auto batch = ctx.vf.dma_batch(ctx.max_batch, ctx.ledger, now);
    if (batch.empty()) break;
    ++rec.dma_batches;
    packets.insert(packets.end(), batch.begin(), batch.end());
  }
  rec.packets = static_cast<int>(packets.size());
  in_round_ = true;
  ++rounds_;

  const int n = static_cast<int>(run_queue_.size());
  const bool multi = n >= 2;
  std::int64_t offset = 0;  // cycles since round start
  TimeNs stall;
  auto at = [&](std::int64_t cyc) { return now + cycles_to_ns({cyc}, ctx.freq_hz) + stall; };

  const std::vector<TaskRef> order(run_queue_.begin(), run_queue_.end());
  for (int pos = 0; pos < n; ++pos) {
    NfTask& task = sg.tasks.at(static_cast<std::size_t>(order[pos].nf_index));
    const TimeNs phase_start = at(offset);
    if (task.profile.stuck) {
      out.stuck = StuckTask{order[pos], phase_start};
      out.held = std::move(packets);
      break;
    }
    if (task.profile.stateful && !packets.empty()) {
      TimeNs ready = phase_start;
      for (const auto& p : packets) {
        auto r = task.state.read(p.flow, phase_start, ctx.store, ctx.rng);
        if (r.fetch) out.fetches.push_back(*r.fetch);
        ready = std::max(ready, r.ready_at);
      }
      stall += ready - phase_start;
    }

    const bool first = task.nf_index == 0;
    std::int64_t hop_charged = 0;
    for (std::size_t j = 0; j < packets.size(); ++j) {
      PacketRec& p = packets[j];
      const std::int64_t service = task.profile.service_cost.at(p.size_bytes).value;
      rec.service_cycles.value += service;
      offset += service;
      if (first) {
        if (multi) {
          const auto c = copy_cost(p.size_bytes, ctx.costs).value;
          rec.copy_cycles.value += c;
          offset += c;
        }
        rec.overhead_cycles += ctx.costs.warmup_per_packet;
        offset += ctx.costs.warmup_per_packet.value;
      } else {
        const auto hop_total = std::llround(ctx.costs.per_hop_overhead * static_cast<double>(j + 1));
        rec.overhead_cycles.value += hop_total - hop_charged;
        offset += hop_total - hop_charged;
        hop_charged = hop_total;
      }
      if (task.profile.stateful) {
        task.state.update(p.flow, task.state.table().lookup(p.flow).value_or(0) + 1);
      }
      const TimeNs done = at(offset);
      ctx.ledger.record_access(done, Accessor{sg.instance, task.nf_index}, p.id, p.owner);
      if (pos == n - 1) out.departures.push_back({p, done});
    }
    if (first && multi && !packets.empty()) {
      rec.copies += static_cast<int>(packets.size());
      const Cycles charged = ctx.buffer.copy_in(packets, ctx.costs);
      if (charged != rec.copy_cycles) throw std::logic_error("copy accounting mismatch");
    }
    if (multi) {
      offset += ctx.costs.t_ctx.value;
      rec.ctx_cycles += ctx.costs.t_ctx;
      ++rec.ctx_switches;
    }
  }

  rec.busy_cycles = {offset};
  rec.stall = stall;
  rec.end = at(offset);
  busy_ += rec.busy_cycles;
  ctx_switches_ += static_cast<std::uint64_t>(rec.ctx_switches);
  return out;
}

void CoreScheduler::finish_round(SGroup& sg) {
  if (!in_round_) throw SchedError("finish_round: no round in progress");
  in_round_ = false;
  if (sg.state == SGroupState::kDraining) move_to_wait_queue(sg);
}

TimeoutVerdict CoreScheduler::timeout_check(SGroup& sg, const TaskRef& task, TimeNs elapsed,
                                            TimeNs yield_timeout) {
  if (task.instance != sg.instance) throw SchedError("timeout_check: task not in sgroup");
  if (elapsed < yield_timeout) return TimeoutVerdict::kOk;
  if (attached_ == sg.instance) {
    in_round_ = false;
    move_to_wait_queue(sg);
  }
  sg.faulted = true;
  sg.active = false;
  return TimeoutVerdict::kTerminated;
}

void CoreScheduler::debug_swap_run_queue(std::size_t a, std::size_t b) {
  std::swap(run_queue_.at(a), run_queue_.at(b));
}

Worker::Worker(const WorkerSpec& s) : spec(s) {
  for (int c = 0; c < s.num_cores; ++c) cores.emplace_back(c);
}

std::optional<int> Worker::pick_idle_core() const {
  for (const auto& c : cores) {
    if (c.idle()) return c.id();
  }
  return std::nullopt;
}

int Worker::attached_cores() const {
  return static_cast<int>(std::count_if(cores.begin(), cores.end(),
                                        [](const CoreScheduler& c) { return !c.idle(); }));
}

std::optional<int> Worker::registration_core(int instance) const {
  for (const auto& c : cores) {
    if (c.is_registered(instance)) return c.id();
  }
  return std::nullopt;
}

int Worker::least_registered_core() const {
  int best = 0;
  for (const auto& c : cores) {
    if (c.registered_count() < cores[static_cast<std::size_t>(best)].registered_count()) best = c.id();
  }
  return best;
}

void attach_sgroup_to_core(Worker& w, SGroup& sg, int core) {
  auto from = w.registration_core(sg.instance);
  if (!from) throw SchedError("attach_sgroup_to_core: sgroup not registered on worker");
  if (*from != core) {
    w.cores.at(static_cast<std::size_t>(*from)).unregister_sgroup(sg);
    w.cores.at(static_cast<std::size_t>(core)).register_sgroup(sg);
  }
  w.cores.at(static_cast<std::size_t>(core)).attach_sgroup(sg);
}

ChainCostSummary effective_chain_costs(const ChainSpec& chain, const CostConstants& costs,
                                       int packet_size) {
  const bool multi = chain.nfs.size() >= 2;
  std::vector<double> t;
  for (std::size_t i = 0; i < chain.nfs.size(); ++i) {
    double c = static_cast<double>(chain.nfs[i].service_cost.at(packet_size).value);
    if (i == 0) {
      c += static_cast<double>(costs.warmup_per_packet.value);
      if (multi) c += static_cast<double>(copy_cost(packet_size, costs).value);
    } else {
      c += costs.per_hop_overhead;
    }
    t.push_back(c);
  }
  return ChainCostSummary::of(std::move(t));
}

double effective_t_ctx(int chain_length, const CostConstants& costs) {
  return chain_length >= 2 ? static_cast<double>(costs.t_ctx.value) : 0.0;
}

}  // namespace quaysim
