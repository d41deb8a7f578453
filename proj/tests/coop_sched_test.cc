#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "quaysim/coop_sched.h"

namespace quaysim {
namespace {

ChainSpec chain_of(int n, std::int64_t cycles) {
  ChainSpec c;
  c.id = 0;
  c.name = "c";
  for (int i = 0; i < n; ++i) c.nfs.push_back({"nf" + std::to_string(i), {cycles, 0.0}, false, false});
  return c;
}

// One instance wired to a single core with its own VF and ledger.
struct Rig {
  explicit Rig(const ChainSpec& chain, int instance = 0)
      : sg(SGroup::from_chain(instance, 0, 0, chain)),
        vf(instance, 4096),
        buffer(instance),
        store(StateStoreModel::from(StateConfig{})),
        rng(1) {}

  RoundContext ctx() {
    return RoundContext{vf, buffer, ledger, costs, 2'400'000'000, 32, store, rng, next_round++, 0};
  }
  void feed(int n, int size = 1024) {
    for (int i = 0; i < n; ++i) {
      PacketRec p;
      p.id = next_packet++;
      p.size_bytes = size;
      vf.enqueue(p);
    }
  }

  SGroup sg;
  NicVfQueue vf;
  ChainPacketBuffer buffer;
  OwnershipLedger ledger;
  CostConstants costs;
  StateStoreModel store;
  Rng rng;
  std::uint64_t next_round = 0;
  std::uint64_t next_packet = 0;
};

TEST(CoreScheduler, RegisterAddsTasksToWaitQueue) {
  CoreScheduler core(0);
  auto sg = SGroup::from_chain(0, 0, 0, chain_of(3, 100));
  core.register_sgroup(sg);
  EXPECT_EQ(core.wait_queue().size(), 3u);
  EXPECT_TRUE(core.run_queue().empty());
  EXPECT_THROW(core.register_sgroup(sg), SchedError);
}

TEST(CoreScheduler, AttachPutsTasksInChainOrder) {
  CoreScheduler core(0);
  auto sg = SGroup::from_chain(0, 0, 0, chain_of(3, 100));
  core.register_sgroup(sg);
  core.attach_sgroup(sg);
  ASSERT_EQ(core.run_queue().size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(core.run_queue()[static_cast<std::size_t>(i)], (TaskRef{0, i}));
  EXPECT_EQ(sg.state, SGroupState::kAttached);
  EXPECT_EQ(sg.core, 0);
}

TEST(CoreScheduler, AttachToOccupiedCoreFails) {
  CoreScheduler core(0);
  auto a = SGroup::from_chain(0, 0, 0, chain_of(2, 100));
  auto b = SGroup::from_chain(1, 0, 0, chain_of(2, 100));
  core.register_sgroup(a);
  core.register_sgroup(b);
  core.attach_sgroup(a);
  EXPECT_THROW(core.attach_sgroup(b), SchedError);
}

TEST(CoreScheduler, AttachThenDetachWithoutTraffic) {
  CoreScheduler core(0);
  auto sg = SGroup::from_chain(0, 0, 0, chain_of(3, 100));
  core.register_sgroup(sg);
  core.attach_sgroup(sg);
  EXPECT_TRUE(core.detach_sgroup(sg));
  EXPECT_TRUE(core.run_queue().empty());
  EXPECT_EQ(core.wait_queue().size(), 3u);
  EXPECT_EQ(sg.state, SGroupState::kDetached);
  EXPECT_TRUE(core.idle());
  EXPECT_EQ(core.busy_cycles().value, 0);
}

TEST(CoreScheduler, DetachMidRoundWaitsForRoundEnd) {
  Rig rig(chain_of(3, 500));
  CoreScheduler core(0);
  core.register_sgroup(rig.sg);
  core.attach_sgroup(rig.sg);
  rig.feed(20);
  auto ctx = rig.ctx();
  auto round = core.execute_batch_round(rig.sg, ctx, {});
  EXPECT_FALSE(core.detach_sgroup(rig.sg));
  EXPECT_EQ(rig.sg.state, SGroupState::kDraining);
  EXPECT_FALSE(core.idle());
  core.finish_round(rig.sg);
  EXPECT_EQ(rig.sg.state, SGroupState::kDetached);
  EXPECT_TRUE(core.idle());
  // Every packet pulled in the round left the last NF.
  EXPECT_EQ(round.departures.size(), 20u);
  EXPECT_TRUE(rig.ledger.violations().empty());
}

TEST(CoreScheduler, CoreReassignedAfterDetach) {
  CoreScheduler core(0);
  auto a = SGroup::from_chain(0, 0, 0, chain_of(2, 100));
  auto b = SGroup::from_chain(1, 1, 0, chain_of(4, 100));
  core.register_sgroup(a);
  core.register_sgroup(b);
  core.attach_sgroup(a);
  core.detach_sgroup(a);
  core.attach_sgroup(b);
  EXPECT_EQ(core.attached(), 1);
  EXPECT_EQ(core.run_queue().size(), 4u);
}

TEST(BatchRound, SingleNfChainHasNoSwitchesOrCopies) {
  Rig rig(chain_of(1, 800));
  CoreScheduler core(0);
  core.register_sgroup(rig.sg);
  core.attach_sgroup(rig.sg);
  rig.feed(32);
  auto ctx = rig.ctx();
  auto r = core.execute_batch_round(rig.sg, ctx, {});
  EXPECT_EQ(r.record.ctx_switches, 0);
  EXPECT_EQ(r.record.copies, 0);
  EXPECT_EQ(r.record.ctx_cycles.value, 0);
  EXPECT_EQ(rig.buffer.copies(), 0u);
  EXPECT_EQ(r.record.busy_cycles.value, 32 * (800 + 100));
}

TEST(BatchRound, FiveNfChainAmortizesSwitches) {
  Rig rig(chain_of(5, 509));
  CoreScheduler core(0);
  core.register_sgroup(rig.sg);
  core.attach_sgroup(rig.sg);
  rig.feed(32);
  auto ctx = rig.ctx();
  auto r = core.execute_batch_round(rig.sg, ctx, {});
  EXPECT_EQ(r.record.packets, 32);
  EXPECT_EQ(r.record.ctx_switches, 5);
  const double per_packet_per_switch =
      static_cast<double>(r.record.ctx_cycles.value) / (r.record.packets * r.record.ctx_switches);
  EXPECT_NEAR(per_packet_per_switch, 66.97, 0.01);
  EXPECT_NEAR(per_packet_per_switch, 67.0, 0.5);
}

TEST(BatchRound, HandSummedThreeNfRound) {
  Rig rig(chain_of(3, 500));
  rig.costs.per_hop_overhead = 0;
  rig.costs.warmup_per_packet = {0};
  CoreScheduler core(0);
  core.register_sgroup(rig.sg);
  core.attach_sgroup(rig.sg);
  rig.feed(10, 100);
  auto ctx = rig.ctx();
  auto r = core.execute_batch_round(rig.sg, ctx, {});
  EXPECT_EQ(r.record.busy_cycles.value, 10 * 247 + 3 * 10 * 500 + 3 * 2143);
  EXPECT_EQ(r.record.busy_cycles.value, 23899);
  EXPECT_EQ(r.record.end - r.record.start, cycles_to_ns({23899}, 2'400'000'000));
}

TEST(BatchRound, BusyCyclesDecompose) {
  Rng draw(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(draw.uniform_int(1, 6));
    ChainSpec c = chain_of(n, 0);
    for (auto& nf : c.nfs) nf.service_cost = {draw.uniform_int(100, 5000), draw.uniform(0.0, 2.0)};
    Rig rig(c);
    rig.sg.batch_multiplier = static_cast<int>(draw.uniform_int(1, 3));
    CoreScheduler core(0);
    core.register_sgroup(rig.sg);
    core.attach_sgroup(rig.sg);
    const int packets = static_cast<int>(draw.uniform_int(1, 100));
    for (int i = 0; i < packets; ++i) rig.feed(1, static_cast<int>(draw.uniform_int(64, 1500)));
    auto ctx = rig.ctx();
    auto r = core.execute_batch_round(rig.sg, ctx, {});
    const auto& rec = r.record;
    const int expected_packets = std::min(packets, 32 * rig.sg.batch_multiplier);
    EXPECT_EQ(rec.packets, expected_packets);
    EXPECT_EQ(rec.ctx_switches, n >= 2 ? n : 0);
    EXPECT_EQ(rec.copies, n >= 2 ? rec.packets : 0);
    EXPECT_EQ(rec.busy_cycles.value, rec.copy_cycles.value + rec.service_cycles.value +
                                         rec.ctx_cycles.value + rec.overhead_cycles.value);
    const auto hop = std::llround(50.8 * rec.packets) * (n - 1);
    EXPECT_EQ(rec.overhead_cycles.value, 100 * rec.packets + hop);
    EXPECT_EQ(rec.ctx_cycles.value, (n >= 2 ? n : 0) * 2143);
    EXPECT_TRUE(rig.ledger.violations().empty());
    // Departures leave in DMA order, no earlier than the previous one.
    for (std::size_t i = 1; i < r.departures.size(); ++i) {
      EXPECT_LT(r.departures[i - 1].packet.id, r.departures[i].packet.id);
      EXPECT_LE(r.departures[i - 1].at, r.departures[i].at);
    }
    core.finish_round(rig.sg);
  }
}

TEST(BatchRound, RunToCompletionOrderInLedger) {
  Rig rig(chain_of(3, 300));
  rig.ledger.set_log_enabled(true);
  CoreScheduler core(0);
  core.register_sgroup(rig.sg);
  core.attach_sgroup(rig.sg);
  rig.feed(32);
  auto ctx = rig.ctx();
  core.execute_batch_round(rig.sg, ctx, {});
  // Every access of NF i precedes every access of NF i + 1.
  int last_nf = 0;
  TimeNs last_t;
  for (const auto& e : rig.ledger.log()) {
    EXPECT_GE(e.accessor.nf_index, last_nf);
    EXPECT_GE(e.time, last_t);
    last_nf = e.accessor.nf_index;
    last_t = e.time;
  }
}

TEST(BatchRound, SwappedRunQueueIsTemporalViolation) {
  Rig rig(chain_of(3, 300));
  CoreScheduler core(0);
  core.register_sgroup(rig.sg);
  core.attach_sgroup(rig.sg);
  core.debug_swap_run_queue(0, 1);
  rig.feed(8);
  auto ctx = rig.ctx();
  core.execute_batch_round(rig.sg, ctx, {});
  EXPECT_GE(rig.ledger.count(ViolationKind::kTemporal), 1u);
}

TEST(Watchdog, StuckNfTerminatedExactlyAtTimeout) {
  ChainSpec c = chain_of(2, 300);
  c.nfs[1].stuck = true;
  Rig rig(c);
  CoreScheduler core(0);
  core.register_sgroup(rig.sg);
  core.attach_sgroup(rig.sg);
  rig.feed(4);
  auto ctx = rig.ctx();
  auto r = core.execute_batch_round(rig.sg, ctx, {});
  ASSERT_TRUE(r.stuck);
  EXPECT_EQ(r.stuck->task, (TaskRef{0, 1}));
  EXPECT_EQ(r.held.size(), 4u);
  const TimeNs timeout = rig.costs.yield_timeout;
  EXPECT_EQ(core.timeout_check(rig.sg, r.stuck->task, timeout - nanos(1), timeout), TimeoutVerdict::kOk);
  EXPECT_EQ(core.timeout_check(rig.sg, r.stuck->task, timeout, timeout), TimeoutVerdict::kTerminated);
  EXPECT_TRUE(rig.sg.faulted);
  EXPECT_TRUE(core.idle());

  auto other = SGroup::from_chain(1, 0, 0, chain_of(2, 300));
  core.register_sgroup(other);
  core.attach_sgroup(other);
  EXPECT_EQ(core.attached(), 1);
}

TEST(Watchdog, WellBehavedNfIsOk) {
  CoreScheduler core(0);
  auto sg = SGroup::from_chain(0, 0, 0, chain_of(2, 100));
  core.register_sgroup(sg);
  core.attach_sgroup(sg);
  EXPECT_EQ(core.timeout_check(sg, {0, 0}, micros(5), millis(10)), TimeoutVerdict::kOk);
  EXPECT_FALSE(sg.faulted);
}

TEST(Worker, AttachMovesRegistrationAcrossCores) {
  WorkerSpec ws;
  ws.num_cores = 3;
  Worker w(ws);
  auto sg = SGroup::from_chain(0, 0, 0, chain_of(2, 100));
  w.cores[0].register_sgroup(sg);
  w.cores[1].register_sgroup(SGroup::from_chain(1, 0, 0, chain_of(2, 100)));
  attach_sgroup_to_core(w, sg, 2);
  EXPECT_EQ(sg.core, 2);
  EXPECT_FALSE(w.cores[0].is_registered(0));
  EXPECT_EQ(w.attached_cores(), 1);
  EXPECT_EQ(w.pick_idle_core(), 0);
  EXPECT_EQ(w.least_registered_core(), 0);
}

TEST(EffectiveCosts, FirstNfCarriesCopyAndWarmup) {
  CostConstants costs;
  auto c = effective_chain_costs(chain_of(3, 1000), costs, 100);
  ASSERT_EQ(c.n, 3);
  EXPECT_DOUBLE_EQ(c.service_cycles[0], 1000 + 100 + 247);
  EXPECT_DOUBLE_EQ(c.service_cycles[1], 1050.8);
  auto single = effective_chain_costs(chain_of(1, 1000), costs, 100);
  EXPECT_DOUBLE_EQ(single.service_cycles[0], 1100);
  EXPECT_EQ(effective_t_ctx(1, costs), 0.0);
  EXPECT_EQ(effective_t_ctx(4, costs), 2143.0);
}

}  // namespace
}  // namespace quaysim
