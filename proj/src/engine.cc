#include "quaysim/engine.h"

#include <algorithm>
#include <deque>
#include <queue>
#include <stdexcept>
#include <string>

#include "quaysim/batch.h"
#include "quaysim/profiler.h"

namespace quaysim {

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::kFlowArrival:
      return "flow_arrival";
    case EventKind::kPacketArrival:
      return "packet_arrival";
    case EventKind::kRuleInstalled:
      return "rule_installed";
    case EventKind::kBatchRound:
      return "batch_round";
    case EventKind::kMonitorTick:
      return "monitor_tick";
    case EventKind::kLoopStep:
      return "loop_step";
    case EventKind::kSyncTick:
      return "sync_tick";
    case EventKind::kFlowEnd:
      return "flow_end";
    case EventKind::kRemoteFetchDone:
      return "remote_fetch_done";
    case EventKind::kTimeoutCheck:
      return "timeout_check";
  }
  return "unknown";
}

void check_scenario(const Scenario& s) {
  auto v = validate_cluster_spec(s.cluster);
  if (!v.ok()) {
    std::string msg = "invalid scenario:";
    for (const auto& e : v.errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  if (s.cluster.chains.empty()) throw std::invalid_argument("invalid scenario: no chains");
  check_traffic_model(s.traffic);
  if (s.duration.value < 0) throw std::invalid_argument("invalid scenario: negative duration");
  if (s.drain_limit.value < 0) throw std::invalid_argument("invalid scenario: negative drain limit");
  if (s.measure_from.value < 0) throw std::invalid_argument("invalid scenario: negative measure_from");
}

int resolve_batch_multiplier(const ClusterSpec& cluster, const ChainSpec& chain,
                             const TrafficModel& traffic) {
  if (chain.batch_multiplier) return *chain.batch_multiplier;
  const auto& w = cluster.workers.front();
  const int n = static_cast<int>(chain.nfs.size());
  BatchParams p;
  p.freq_hz = w.freq_hz;
  p.t_ctx_cycles = effective_t_ctx(n, cluster.costs);
  p.b_m = w.max_batch;
  p.b_v = w.max_batch;
  p.p = cluster.scaling.batch_ratio;
  return min_batch(effective_chain_costs(chain, cluster.costs, median_packet_size(traffic)), p);
}

std::vector<ResolvedChain> resolve_chains(const Scenario& s, int threads) {
  check_scenario(s);
  std::vector<ResolvedChain> out;
  const int size = median_packet_size(s.traffic);
  for (std::size_t i = 0; i < s.cluster.chains.size(); ++i) {
    const ChainSpec& c = s.cluster.chains[i];
    ResolvedChain r;
    r.batch_multiplier = resolve_batch_multiplier(s.cluster, c, s.traffic);
    const std::uint64_t seed = derive_seed(s.seed, 1000 + i);
    if (c.max_rate_pps) {
      r.max_rate = *c.max_rate_pps;
    } else {
      r.max_rate = measure_capacity(s.cluster, c, r.batch_multiplier, size, seed);
    }
    if (c.load_threshold) {
      r.threshold = *c.load_threshold;
    } else {
      r.curve = profile_chain(s.cluster, c, s.traffic, r.batch_multiplier, r.max_rate, seed, threads);
      if (!c.max_rate_pps) r.max_rate = r.curve->max_rate();
      const auto choice = pick_load_threshold(*r.curve, c.slo_p99);
      r.threshold = choice.threshold_pct / 100.0;
      r.feasible = choice.feasible;
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct Event {
  TimeNs time;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kFlowArrival;
  int a = -1;
  int b = -1;
  FlowKey key;
};

struct EventLater {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    return x.seq > y.seq;
  }
};

enum class FlowState { kNew, kBypass, kRejected, kAssigned, kOrphaned };

struct FlowRt {
  FlowSpec spec;
  int chain = -1;
  int instance = -1;
  FlowState state = FlowState::kNew;
  bool ended = false;
  bool departed_any = false;
  std::uint64_t last_departed = 0;
};

struct InstanceRt {
  int id = -1;
  int chain = -1;
  int worker = -1;
  NicVfQueue vf;
  ChainPacketBuffer buf;
  bool deployed = true;
  bool dead = false;
  bool in_round = false;
  bool deferred = false;
  int flows = 0;
  int pending_installs = 0;
  std::uint64_t window_arrivals = 0;
  TimeNs last_arrival;
  Cycles last_round_busy;
  std::optional<BatchRound> round;

  InstanceRt(int id_, int chain_, int worker_, int vf_capacity)
      : id(id_), chain(chain_), worker(worker_), vf(id_, vf_capacity), buf(id_) {}
};

struct ChainAcc {
  std::uint64_t injected = 0;
  std::uint64_t processed = 0;
  std::uint64_t dropped = 0;
  std::uint64_t copies = 0;
  std::uint64_t first_nf_packets = 0;
  std::uint64_t ctx_switches = 0;
  std::uint64_t rounds = 0;
  std::uint64_t window_processed = 0;
  int max_queue_len = 0;
  int peak_instances = 0;
  std::vector<std::int64_t> latencies;
};

class Sim : public InstanceDeployer {
 public:
  Sim(const Scenario& s, const std::vector<ResolvedChain>& resolved)
      : s_(s),
        resolved_(resolved),
        controller_(s.cluster.scaling, s.cluster.monitor, *this),
        store_(StateStoreModel::from(s.cluster.state)),
        state_rng_(derive_seed(s.seed, 3)),
        gen_(s.traffic, s.seed, s.duration),
        chains_(s.cluster.chains.size()) {
    for (const auto& w : s.cluster.workers) workers_.emplace_back(w);
    result_.resolved = resolved;
    result_.ledger.set_log_enabled(s.output.ledger_log);
    traffic_end_ = s.duration;
  }

  RunResult run();

  std::optional<DeployedInstance> deploy(int logical_chain) override;
  void undeploy(int instance) override;
  int worker_cores(int worker) const override {
    return workers_.at(static_cast<std::size_t>(worker)).spec.num_cores;
  }

 private:
  void push(TimeNs t, EventKind kind, int a = -1, int b = -1, FlowKey key = {}) {
    queue_.push(Event{t, next_seq_++, kind, a, b, key});
  }
  void schedule_next_flow();
  void stop_traffic(TimeNs now);

  void on_flow_arrival(int flow);
  void on_packet_arrival(int flow);
  void on_rule_installed(int flow);
  void on_batch_round(int instance);
  void on_monitor_tick();
  void on_sync_tick();
  void on_flow_end(int flow);
  void on_fetch_done(int instance, const FlowKey& key);
  void on_timeout(int instance);

  void deliver(InstanceRt& inst, PacketRec p, bool count_arrival);
  void kick(InstanceRt& inst);
  void start_round(InstanceRt& inst);
  void do_loop_step(int worker);
  void note_core(int worker, int core, int instance, bool attach);
  void drop_packets(InstanceRt& inst, const std::vector<PacketRec>& pkts);
  bool drained() const;
  std::uint64_t in_flight() const;
  void finish_report();

  const Scenario& s_;
  std::vector<ResolvedChain> resolved_;
  RunResult result_;
  Controller controller_;
  StateStoreModel store_;
  Rng state_rng_;
  TrafficGenerator gen_;
  std::vector<Worker> workers_;
  std::vector<SGroup> sgroups_;
  std::deque<InstanceRt> insts_;  // stable references across deploys
  std::deque<FlowRt> flows_;
  std::vector<ChainAcc> chains_;
  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_packet_ = 0;
  std::uint64_t round_id_ = 0;
  TimeNs now_;
  TimeNs traffic_end_;
  bool traffic_done_ = false;
  int attached_total_ = 0;
  std::vector<int> attached_per_chain_;
};

std::optional<DeployedInstance> Sim::deploy(int lc) {
  int best = -1;
  for (std::size_t w = 0; w < workers_.size(); ++w) {
    const auto& wk = workers_[w];
    if (static_cast<int>(wk.instances.size()) >= wk.spec.max_sgroups) continue;
    if (best < 0 || wk.instances.size() < workers_[static_cast<std::size_t>(best)].instances.size()) {
      best = static_cast<int>(w);
    }
  }
  if (best < 0) return std::nullopt;
  Worker& wk = workers_[static_cast<std::size_t>(best)];
  const int id = static_cast<int>(sgroups_.size());
  SGroup sg = SGroup::from_chain(id, lc, best, s_.cluster.chains.at(static_cast<std::size_t>(lc)));
  sg.batch_multiplier = resolved_.at(static_cast<std::size_t>(lc)).batch_multiplier;
  sgroups_.push_back(std::move(sg));
  insts_.emplace_back(id, lc, best, wk.spec.vf_queue_capacity);
  wk.cores.at(static_cast<std::size_t>(wk.least_registered_core())).register_sgroup(sgroups_.back());
  wk.instances.push_back(id);
  return DeployedInstance{id, best};
}

void Sim::undeploy(int instance) {
  SGroup& sg = sgroups_.at(static_cast<std::size_t>(instance));
  InstanceRt& inst = insts_.at(static_cast<std::size_t>(instance));
  Worker& wk = workers_.at(static_cast<std::size_t>(inst.worker));
  if (sg.scheduled()) throw SchedError("undeploy: instance still scheduled");
  if (auto core = wk.registration_core(instance)) {
    wk.cores.at(static_cast<std::size_t>(*core)).unregister_sgroup(sg);
  }
  std::erase(wk.instances, instance);
  inst.deployed = false;
}

void Sim::note_core(int worker, int core, int instance, bool attach) {
  const int chain = insts_.at(static_cast<std::size_t>(instance)).chain;
  attached_total_ += attach ? 1 : -1;
  attached_per_chain_.at(static_cast<std::size_t>(chain)) += attach ? 1 : -1;
  result_.core_trace.push_back({now_, worker, core, instance, chain, attach, attached_total_});
}

void Sim::schedule_next_flow() {
  if (traffic_done_) return;
  auto f = gen_.next_flow();
  if (!f) return;
  FlowRt rt;
  rt.spec = *f;
  const int idx = static_cast<int>(flows_.size());
  if (f->id != flows_.size()) throw std::logic_error("flow ids must be dense");
  flows_.push_back(std::move(rt));
  push(f->start, EventKind::kFlowArrival, idx);
}

void Sim::stop_traffic(TimeNs now) {
  if (traffic_done_) return;
  traffic_done_ = true;
  traffic_end_ = now;
}

void Sim::on_flow_arrival(int idx) {
  FlowRt& f = flows_.at(static_cast<std::size_t>(idx));
  schedule_next_flow();
  if (auto c = classify(s_.cluster.chains, f.spec.key)) {
    f.chain = static_cast<int>(*c);
  } else {
    f.state = FlowState::kBypass;
  }
  push(std::min(f.spec.end(), s_.duration), EventKind::kFlowEnd, idx);
  on_packet_arrival(idx);
}

void Sim::on_packet_arrival(int idx) {
  if (traffic_done_) return;
  FlowRt& f = flows_.at(static_cast<std::size_t>(idx));
  PacketRec p;
  p.id = next_packet_++;
  p.flow_id = f.spec.id;
  p.flow = f.spec.key;
  p.size_bytes = f.spec.size_bytes;
  p.arrival_ts = now_;
  ++result_.report.injected;
  if (f.chain >= 0) ++chains_[static_cast<std::size_t>(f.chain)].injected;

  switch (f.state) {
    case FlowState::kBypass:
      ++result_.report.bypass;
      break;
    case FlowState::kRejected:
      ++result_.report.dropped_rejected;
      ++chains_[static_cast<std::size_t>(f.chain)].dropped;
      break;
    case FlowState::kOrphaned:
      ++result_.report.dropped_timeout;
      ++chains_[static_cast<std::size_t>(f.chain)].dropped;
      break;
    case FlowState::kNew:
    case FlowState::kAssigned: {
      RouteResult r = result_.flow_table.route(p);
      if (r.kind == RouteKind::kDeliver) {
        deliver(insts_.at(static_cast<std::size_t>(r.instance)), p, true);
      } else if (r.kind == RouteKind::kBuffered) {
        InstanceRt& inst = insts_.at(static_cast<std::size_t>(r.instance));
        ++inst.window_arrivals;
        inst.last_arrival = now_;
      } else {
        Assignment a = handle_new_flow(f.spec.key, f.chain, controller_, result_.flow_table, now_);
        result_.assignments.push_back(a);
        if (a.instance < 0) {
          f.state = FlowState::kRejected;
          ++result_.report.dropped_rejected;
          ++chains_[static_cast<std::size_t>(f.chain)].dropped;
          break;
        }
        f.state = FlowState::kAssigned;
        f.instance = a.instance;
        InstanceRt& inst = insts_.at(static_cast<std::size_t>(a.instance));
        ++inst.flows;
        ++inst.pending_installs;
        sgroups_.at(static_cast<std::size_t>(a.instance)).active = true;
        auto& acc = chains_[static_cast<std::size_t>(f.chain)];
        acc.peak_instances = std::max(
            acc.peak_instances, static_cast<int>(controller_.chain(f.chain).active.size()));
        push(a.install_done, EventKind::kRuleInstalled, idx);
        result_.flow_table.route(p);
        ++inst.window_arrivals;
        inst.last_arrival = now_;
        do_loop_step(inst.worker);
      }
      break;
    }
  }

  if (s_.traffic.packet_budget > 0 && result_.report.injected >= s_.traffic.packet_budget) {
    stop_traffic(now_ + nanos(1));
    return;
  }
  const TimeNs next = now_ + f.spec.gap;
  if (next < f.spec.end() && next < s_.duration) push(next, EventKind::kPacketArrival, idx);
}

void Sim::deliver(InstanceRt& inst, PacketRec p, bool count_arrival) {
  if (count_arrival) {
    ++inst.window_arrivals;
    inst.last_arrival = now_;
  }
  auto& acc = chains_[static_cast<std::size_t>(inst.chain)];
  if (!inst.vf.enqueue(std::move(p))) {
    ++result_.report.dropped_vf;
    ++acc.dropped;
    return;
  }
  if (now_ >= s_.measure_from) {
    acc.max_queue_len = std::max(acc.max_queue_len, static_cast<int>(inst.vf.size()));
  }
  kick(inst);
}

void Sim::kick(InstanceRt& inst) {
  const SGroup& sg = sgroups_.at(static_cast<std::size_t>(inst.id));
  if (sg.state == SGroupState::kAttached && !inst.in_round && !inst.vf.empty()) start_round(inst);
}

void Sim::start_round(InstanceRt& inst) {
  SGroup& sg = sgroups_.at(static_cast<std::size_t>(inst.id));
  Worker& wk = workers_.at(static_cast<std::size_t>(inst.worker));
  CoreScheduler& core = wk.cores.at(static_cast<std::size_t>(*sg.core));
  const ChainSpec& spec = s_.cluster.chains.at(static_cast<std::size_t>(inst.chain));
  RoundContext ctx{inst.vf,        inst.buf,        result_.ledger, s_.cluster.costs,
                   wk.spec.freq_hz, wk.spec.max_batch, store_,         state_rng_,
                   round_id_++,    spec.id};
  BatchRound br = core.execute_batch_round(sg, ctx, now_);
  inst.in_round = true;
  inst.last_round_busy = br.record.busy_cycles;
  auto& acc = chains_[static_cast<std::size_t>(inst.chain)];
  ++acc.rounds;
  acc.copies += static_cast<std::uint64_t>(br.record.copies);
  acc.ctx_switches += static_cast<std::uint64_t>(br.record.ctx_switches);
  if (!(br.stuck && br.stuck->task.nf_index == 0)) {
    acc.first_nf_packets += static_cast<std::uint64_t>(br.record.packets);
  }
  result_.report.state_fetches += br.fetches.size();
  for (const auto& f : br.fetches) push(f.done_at, EventKind::kRemoteFetchDone, inst.id, -1, f.flow);
  if (s_.output.keep_rounds) result_.rounds.push_back(br.record);
  if (br.stuck) {
    push(br.stuck->started + s_.cluster.costs.yield_timeout, EventKind::kTimeoutCheck, inst.id,
         br.stuck->task.nf_index);
  } else {
    push(br.record.end, EventKind::kBatchRound, inst.id);
  }
  inst.round = std::move(br);
}

void Sim::on_batch_round(int instance) {
  InstanceRt& inst = insts_.at(static_cast<std::size_t>(instance));
  if (!inst.round || !inst.in_round) return;
  BatchRound br = std::move(*inst.round);
  inst.round.reset();
  auto& acc = chains_[static_cast<std::size_t>(inst.chain)];
  for (const auto& d : br.departures) {
    ++result_.report.processed;
    ++acc.processed;
    if (d.packet.arrival_ts >= s_.measure_from) {
      acc.latencies.push_back((d.at - d.packet.arrival_ts).value);
    }
    if (d.at >= s_.measure_from && d.at < traffic_end_) ++acc.window_processed;
    FlowRt& f = flows_.at(static_cast<std::size_t>(d.packet.flow_id));
    if (f.departed_any && d.packet.id < f.last_departed) ++result_.report.order_violations;
    f.departed_any = true;
    f.last_departed = d.packet.id;
    if (s_.output.keep_flow_departures) result_.flow_departures.emplace_back(f.spec.id, d.packet.id);
    result_.ledger.retire(d.packet.id);
  }
  inst.buf.release(static_cast<std::size_t>(br.record.copies));
  SGroup& sg = sgroups_.at(static_cast<std::size_t>(instance));
  Worker& wk = workers_.at(static_cast<std::size_t>(inst.worker));
  const int core = *sg.core;
  wk.cores.at(static_cast<std::size_t>(core)).finish_round(sg);
  inst.in_round = false;
  if (!sg.scheduled()) {
    note_core(inst.worker, core, instance, false);
    do_loop_step(inst.worker);
  } else {
    kick(inst);
  }
}

void Sim::drop_packets(InstanceRt& inst, const std::vector<PacketRec>& pkts) {
  for (const auto& p : pkts) {
    result_.ledger.retire(p.id);
    ++result_.report.dropped_timeout;
    ++chains_[static_cast<std::size_t>(inst.chain)].dropped;
  }
}

void Sim::on_timeout(int instance) {
  InstanceRt& inst = insts_.at(static_cast<std::size_t>(instance));
  SGroup& sg = sgroups_.at(static_cast<std::size_t>(instance));
  if (!inst.round || !inst.round->stuck || inst.dead) return;
  Worker& wk = workers_.at(static_cast<std::size_t>(inst.worker));
  const int core = *sg.core;
  const StuckTask st = *inst.round->stuck;
  const auto verdict = wk.cores.at(static_cast<std::size_t>(core))
                           .timeout_check(sg, st.task, now_ - st.started, s_.cluster.costs.yield_timeout);
  if (verdict != TimeoutVerdict::kTerminated) return;
  note_core(inst.worker, core, instance, false);
  drop_packets(inst, inst.round->held);
  drop_packets(inst, inst.vf.drain_all());
  inst.buf.release(inst.buf.resident());
  inst.round.reset();
  inst.in_round = false;
  inst.dead = true;
  controller_.record_fault({now_, FaultKind::kYieldTimeout, instance});
  controller_.retire(instance);
  for (auto& f : flows_) {
    if (f.instance != instance || f.state != FlowState::kAssigned) continue;
    f.state = FlowState::kOrphaned;
    result_.flow_table.remove(f.spec.key);
  }
  undeploy(instance);
  controller_.maintain_pool(inst.chain, now_);
  do_loop_step(inst.worker);
}

void Sim::on_rule_installed(int idx) {
  FlowRt& f = flows_.at(static_cast<std::size_t>(idx));
  auto pkts = result_.flow_table.complete_install(f.spec.key, now_);
  InstanceRt& inst = insts_.at(static_cast<std::size_t>(f.instance));
  --inst.pending_installs;
  if (f.state == FlowState::kOrphaned) {
    drop_packets(inst, pkts);
    result_.flow_table.remove(f.spec.key);
    return;
  }
  for (auto& p : pkts) deliver(inst, std::move(p), false);
  if (f.ended) result_.flow_table.remove(f.spec.key);
}

void Sim::on_flow_end(int idx) {
  FlowRt& f = flows_.at(static_cast<std::size_t>(idx));
  f.ended = true;
  if (f.state != FlowState::kAssigned) return;
  --insts_.at(static_cast<std::size_t>(f.instance)).flows;
  if (result_.flow_table.installed(f.spec.key)) result_.flow_table.remove(f.spec.key);
}

void Sim::on_monitor_tick() {
  const TimeNs window = s_.cluster.monitor.window;
  for (std::size_t i = 0; i < insts_.size(); ++i) {
    InstanceRt& inst = insts_[i];
    SGroup& sg = sgroups_.at(i);
    if (!inst.deployed || inst.dead || !sg.active) {
      inst.window_arrivals = 0;
      continue;
    }
    ChainStats st;
    st.instance = inst.id;
    st.packet_rate = static_cast<double>(inst.window_arrivals) * 1e9 / static_cast<double>(window.value);
    st.queue_len = static_cast<int>(inst.vf.size());
    st.per_batch_exec = inst.last_round_busy;
    st.last_report = now_;
    controller_.on_stats_update(st);
    inst.window_arrivals = 0;
    const bool idle = inst.flows == 0 && inst.pending_installs == 0 && inst.vf.empty() &&
                      !inst.in_round && now_ - inst.last_arrival >= s_.cluster.scaling.idle_window;
    if (idle) {
      sg.active = false;
      do_loop_step(inst.worker);
      if (sg.scheduled()) throw std::logic_error("idle instance failed to detach");
      controller_.return_to_pool(inst.id, now_);
    }
  }
}

void Sim::do_loop_step(int worker) {
  Worker& wk = workers_.at(static_cast<std::size_t>(worker));
  std::vector<std::pair<int, int>> cores_before;
  for (int id : wk.instances) {
    const auto& sg = sgroups_.at(static_cast<std::size_t>(id));
    if (sg.core) cores_before.emplace_back(id, *sg.core);
  }
  LoopStepResult r = scheduler_loop_step(wk, sgroups_);
  for (int id : r.detached) {
    for (const auto& [inst, core] : cores_before) {
      if (inst == id) note_core(worker, core, id, false);
    }
  }
  for (const auto& [id, core] : r.attached) {
    InstanceRt& inst = insts_.at(static_cast<std::size_t>(id));
    inst.deferred = false;
    note_core(worker, core, id, true);
    kick(inst);
  }
  for (int id : r.deferred) {
    InstanceRt& inst = insts_.at(static_cast<std::size_t>(id));
    if (!inst.deferred) controller_.record_fault({now_, FaultKind::kNoIdleCore, id});
    inst.deferred = true;
  }
}

void Sim::on_sync_tick() {
  for (auto& sg : sgroups_) {
    const InstanceRt& inst = insts_.at(static_cast<std::size_t>(sg.instance));
    if (!inst.deployed || inst.dead) continue;
    for (auto& t : sg.tasks) {
      if (!t.profile.stateful) continue;
      t.state.periodic_sync(now_, store_, state_rng_);
      ++result_.report.state_syncs;
    }
  }
}

void Sim::on_fetch_done(int instance, const FlowKey& key) {
  InstanceRt& inst = insts_.at(static_cast<std::size_t>(instance));
  if (inst.dead) return;
  for (auto& t : sgroups_.at(static_cast<std::size_t>(instance)).tasks) {
    if (t.state.fetch_pending(key)) t.state.complete_fetch(key);
  }
}

bool Sim::drained() const {
  if (result_.flow_table.buffered_packets() != 0) return false;
  for (const auto& inst : insts_) {
    if (inst.in_round || !inst.vf.empty() || inst.pending_installs != 0) return false;
  }
  return true;
}

std::uint64_t Sim::in_flight() const {
  std::uint64_t n = result_.flow_table.buffered_packets();
  for (const auto& inst : insts_) {
    n += inst.vf.size();
    if (inst.round) {
      n += inst.round->stuck ? inst.round->held.size()
                             : static_cast<std::uint64_t>(inst.round->record.packets);
    }
  }
  return n;
}

RunResult Sim::run() {
  attached_per_chain_.assign(s_.cluster.chains.size(), 0);
  for (std::size_t i = 0; i < s_.cluster.chains.size(); ++i) {
    const auto& r = resolved_[i];
    const int lc = controller_.add_logical_chain(s_.cluster.chains[i], r.threshold, r.max_rate);
    if (!r.feasible) controller_.record_fault({now_, FaultKind::kInfeasibleSlo, lc});
    controller_.maintain_pool(lc, now_);
  }
  schedule_next_flow();
  const TimeNs window = s_.cluster.monitor.window;
  const TimeNs loop = s_.cluster.scaling.loop_period;
  const TimeNs sync = s_.cluster.state.sync_period;
  bool any_stateful = false;
  for (const auto& c : s_.cluster.chains) {
    for (const auto& nf : c.nfs) any_stateful = any_stateful || nf.stateful;
  }
  push(window, EventKind::kMonitorTick);
  for (std::size_t w = 0; w < workers_.size(); ++w) push(loop, EventKind::kLoopStep, static_cast<int>(w));
  if (any_stateful && sync.value > 0) push(sync, EventKind::kSyncTick);

  while (!queue_.empty()) {
    if (!traffic_done_ && queue_.top().time >= s_.duration) stop_traffic(s_.duration);
    if (traffic_done_ && drained()) break;
    if (traffic_done_ && queue_.top().time > traffic_end_ + s_.drain_limit) break;
    const Event ev = queue_.top();
    queue_.pop();
    if (ev.time < now_) throw std::logic_error("event loop went back in time");
    now_ = ev.time;
    if (s_.output.keep_event_times) result_.event_times.emplace_back(ev.time, ev.seq);
    switch (ev.kind) {
      case EventKind::kFlowArrival:
        if (!traffic_done_) on_flow_arrival(ev.a);
        break;
      case EventKind::kPacketArrival:
        on_packet_arrival(ev.a);
        break;
      case EventKind::kRuleInstalled:
        on_rule_installed(ev.a);
        break;
      case EventKind::kBatchRound:
        on_batch_round(ev.a);
        break;
      case EventKind::kMonitorTick:
        on_monitor_tick();
        push(now_ + window, EventKind::kMonitorTick);
        break;
      case EventKind::kLoopStep:
        do_loop_step(ev.a);
        push(now_ + loop, EventKind::kLoopStep, ev.a);
        break;
      case EventKind::kSyncTick:
        on_sync_tick();
        push(now_ + sync, EventKind::kSyncTick);
        break;
      case EventKind::kFlowEnd:
        on_flow_end(ev.a);
        break;
      case EventKind::kRemoteFetchDone:
        on_fetch_done(ev.a, ev.key);
        break;
      case EventKind::kTimeoutCheck:
        on_timeout(ev.a);
        break;
    }
  }
  if (!traffic_done_) stop_traffic(std::min(now_, s_.duration));
  finish_report();
  return std::move(result_);
}

void Sim::finish_report() {
  MetricsReport& r = result_.report;
  r.seed = s_.seed;
  r.traffic_end = traffic_end_;
  r.sim_end = now_;
  r.flows = flows_.size();
  r.in_flight = in_flight();
  r.rule_installs = result_.flow_table.installs();
  r.monitor_accepted = controller_.accepted_updates();
  r.monitor_suppressed = controller_.suppressed_updates();

  // Core usage over [measure_from, traffic_end].
  const TimeNs lo = std::min(s_.measure_from, traffic_end_);
  const TimeNs hi = traffic_end_;
  const std::size_t nchains = s_.cluster.chains.size();
  std::vector<double> area(nchains, 0.0);
  std::vector<int> level(nchains, 0), peak(nchains, 0);
  double total_area = 0.0;
  int total_level = 0, total_peak = 0;
  TimeNs last = lo;
  auto advance = [&](TimeNs t) {
    const TimeNs a = std::max(last, lo), b = std::min(t, hi);
    if (b > a) {
      const double dt = static_cast<double>((b - a).value);
      total_area += dt * total_level;
      for (std::size_t c = 0; c < nchains; ++c) area[c] += dt * level[c];
    }
    last = std::max(last, t);
  };
  for (const auto& e : result_.core_trace) {
    advance(e.at);
    const int d = e.attach ? 1 : -1;
    total_level += d;
    level[static_cast<std::size_t>(e.chain)] += d;
    if (e.at <= hi) {
      total_peak = std::max(total_peak, total_level);
      peak[static_cast<std::size_t>(e.chain)] =
          std::max(peak[static_cast<std::size_t>(e.chain)], level[static_cast<std::size_t>(e.chain)]);
    }
  }
  advance(hi);
  const double span = static_cast<double>((hi - lo).value);
  r.avg_cores = span > 0 ? total_area / span : 0.0;
  r.max_cores = total_peak;

  std::vector<std::int64_t> all;
  const double window_s = to_seconds(hi - lo);
  for (std::size_t c = 0; c < nchains; ++c) {
    ChainAcc& acc = chains_[c];
    const ChainSpec& spec = s_.cluster.chains[c];
    ChainMetrics m;
    m.chain_id = spec.id;
    m.name = spec.name;
    m.threshold = resolved_[c].threshold;
    m.max_rate_pps = resolved_[c].max_rate;
    m.batch_multiplier = resolved_[c].batch_multiplier;
    m.threshold_feasible = resolved_[c].feasible;
    m.injected = acc.injected;
    m.processed = acc.processed;
    m.dropped = acc.dropped;
    all.insert(all.end(), acc.latencies.begin(), acc.latencies.end());
    m.latency = summarize_latencies(acc.latencies);
    m.copies = acc.copies;
    m.first_nf_packets = acc.first_nf_packets;
    m.ctx_switches = acc.ctx_switches;
    m.rounds = acc.rounds;
    m.avg_cores = span > 0 ? area[c] / span : 0.0;
    m.max_cores = peak[c];
    m.peak_instances = acc.peak_instances;
    m.max_queue_len = acc.max_queue_len;
    m.rate_pps = window_s > 0 ? static_cast<double>(acc.window_processed) / window_s : 0.0;
    r.copies += m.copies;
    r.ctx_switches += m.ctx_switches;
    r.rounds += m.rounds;
    r.max_queue_len = std::max(r.max_queue_len, m.max_queue_len);
    r.chains.push_back(std::move(m));
  }
  r.latency = summarize_latencies(all);

  r.violations = result_.ledger.violations().size();
  for (auto k : {ViolationKind::kCrossChain, ViolationKind::kNicBufferDownstream, ViolationKind::kTemporal}) {
    r.violations_by_kind[violation_name(k)] = result_.ledger.count(k);
  }
  for (const auto& f : controller_.faults()) ++r.faults[fault_name(f.kind)];
  result_.faults = controller_.faults();
  result_.pool_trace = controller_.pool_trace();
  check_conservation(r);
}

}  // namespace

RunResult run_scenario(const Scenario& s, const std::vector<ResolvedChain>& resolved) {
  check_scenario(s);
  if (resolved.size() != s.cluster.chains.size()) {
    throw std::invalid_argument("run_scenario: one resolved entry per chain required");
  }
  Sim sim(s, resolved);
  return sim.run();
}

RunResult run_scenario(const Scenario& s, int threads) {
  return run_scenario(s, resolve_chains(s, threads));
}

}  // namespace quaysim
