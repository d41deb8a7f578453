#include <gtest/gtest.h>

#include <sstream>

#include "fake_deployer.h"
#include "quaysim/controller.h"

namespace quaysim {
namespace {

using testing::FakeDeployer;

ChainSpec chain_of(int n) {
  ChainSpec c;
  c.name = "c";
  for (int i = 0; i < n; ++i) c.nfs.push_back({"nf" + std::to_string(i), {500, 0.0}, false, false});
  return c;
}

ChainStats stats(int instance, double rate, int queue = 0) {
  ChainStats s;
  s.instance = instance;
  s.packet_rate = rate;
  s.queue_len = queue;
  return s;
}

struct Rig {
  explicit Rig(ScalingConfig sc = {}) : ctl(sc, MonitorConfig{}, dep) {
    ctl.add_logical_chain(chain_of(2), 0.5, 900000.0);
    ctl.scale_out(0, {});
    ctl.set_active(0);
  }
  FakeDeployer dep;
  Controller ctl;
};

TEST(MonitorFilter, TinyChangeSuppressed) {
  Rig rig;
  EXPECT_EQ(rig.ctl.on_stats_update(stats(0, 100000)), StatsVerdict::kAccepted);
  EXPECT_EQ(rig.ctl.on_stats_update(stats(0, 100100)), StatsVerdict::kSuppressed);
  EXPECT_DOUBLE_EQ(rig.ctl.instance_rate(0), 100000);
}

TEST(MonitorFilter, QueueCrossingMarkAccepted) {
  Rig rig;
  rig.ctl.on_stats_update(stats(0, 100000, 10));
  EXPECT_EQ(rig.ctl.on_stats_update(stats(0, 100000, 64)), StatsVerdict::kAccepted);
  EXPECT_EQ(rig.ctl.on_stats_update(stats(0, 100000, 70)), StatsVerdict::kSuppressed);
  EXPECT_EQ(rig.ctl.on_stats_update(stats(0, 100000, 5)), StatsVerdict::kAccepted);
}

TEST(MonitorFilter, ConstantTrafficYieldsAtMostOneUpdate) {
  Rig rig;
  for (int w = 0; w < 10; ++w) rig.ctl.on_stats_update(stats(0, 250000, 3));
  EXPECT_LE(rig.ctl.accepted_updates(), 1u);
  EXPECT_EQ(rig.ctl.accepted_updates() + rig.ctl.suppressed_updates(), 10u);
}

TEST(ChainLoad, Arithmetic) {
  EXPECT_DOUBLE_EQ(chain_load(450000, 900000), 0.5);
  EXPECT_DOUBLE_EQ(chain_load(0, 900000), 0.0);
  EXPECT_DOUBLE_EQ(chain_load(900000, 900000), 1.0);
  EXPECT_DOUBLE_EQ(chain_load(9e9, 900000), 1.5);
  EXPECT_THROW(chain_load(1, 0), std::invalid_argument);
}

TEST(PickLoadThreshold, ScanOracle) {
  ProfileCurve c;
  c.rows = {{25, micros(40), 3, 0}, {50, micros(70), 5, 0}, {80, micros(150), 30, 0}};
  auto r = pick_load_threshold(c, micros(100));
  EXPECT_DOUBLE_EQ(r.threshold_pct, 50);
  EXPECT_TRUE(r.feasible);
  EXPECT_DOUBLE_EQ(pick_load_threshold(c, micros(500)).threshold_pct, 80);
  auto low = pick_load_threshold(c, micros(10));
  EXPECT_DOUBLE_EQ(low.threshold_pct, 25);
  EXPECT_FALSE(low.feasible);
  EXPECT_THROW(pick_load_threshold(ProfileCurve{}, micros(1)), std::invalid_argument);
}

TEST(PickLoadThreshold, CurveCrossingBetweenFiftyAndFiftyFive) {
  ProfileCurve c;
  for (int t = 10; t <= 85; t += 5) c.rows.push_back({static_cast<double>(t), micros(40 + t), t, 0});
  c.rows[8].p99 = micros(99);   // 50%
  c.rows[9].p99 = micros(101);  // 55%
  for (std::size_t i = 10; i < c.rows.size(); ++i) c.rows[i].p99 = micros(200 + static_cast<std::int64_t>(i));
  EXPECT_DOUBLE_EQ(pick_load_threshold(c, micros(100)).threshold_pct, 50);
}

TEST(ProfileCurve, CsvRoundTripAndMaxRate) {
  ProfileCurve c;
  c.rows = {{10, micros(20), 1, 10000}, {50, micros(30), 4, 50000.5}, {85, micros(90), 40, 85000}};
  std::stringstream ss;
  c.write_csv(ss);
  EXPECT_EQ(ProfileCurve::read_csv(ss).rows, c.rows);
  EXPECT_DOUBLE_EQ(c.max_rate(), 100000);
  c.rows[1].threshold_pct = 5;
  EXPECT_THROW(c.check(), std::invalid_argument);
}

TEST(Pool, EmptyPoolScalesOutToThreshold) {
  ScalingConfig sc;
  sc.scale_out_thresh = 2;
  sc.scale_in_thresh = 4;
  FakeDeployer dep;
  Controller ctl(sc, MonitorConfig{}, dep);
  ctl.add_logical_chain(chain_of(1), 0.5, 1000);
  ctl.maintain_pool(0, {});
  EXPECT_EQ(dep.deployed.size(), 2u);
  EXPECT_EQ(ctl.chain(0).idle.size(), 2u);
  ASSERT_EQ(ctl.pool_trace().size(), 1u);
  EXPECT_EQ(ctl.pool_trace()[0].idle, 2);
}

TEST(Pool, OversizedPoolScalesIn) {
  ScalingConfig sc;
  sc.scale_out_thresh = 1;
  sc.scale_in_thresh = 3;
  FakeDeployer dep;
  Controller ctl(sc, MonitorConfig{}, dep);
  ctl.add_logical_chain(chain_of(1), 0.5, 1000);
  for (int i = 0; i < 5; ++i) ctl.scale_out(0, {});
  ctl.maintain_pool(0, {});
  EXPECT_EQ(dep.undeployed.size(), 2u);
  EXPECT_EQ(dep.undeployed, (std::vector<int>{4, 3}));
  EXPECT_EQ(ctl.chain(0).idle.size(), 3u);
}

TEST(Pool, ScaleOutFailureRecordsFault) {
  FakeDeployer dep;
  dep.capacity = 0;
  Controller ctl(ScalingConfig{}, MonitorConfig{}, dep);
  ctl.add_logical_chain(chain_of(1), 0.5, 1000);
  ctl.maintain_pool(0, {});
  ASSERT_EQ(ctl.faults().size(), 1u);
  EXPECT_EQ(ctl.faults()[0].kind, FaultKind::kScaleOutFailed);
}

TEST(Pool, ReturnToPoolClearsStatsAndReenters) {
  Rig rig;
  rig.ctl.on_stats_update(stats(0, 400000));
  rig.ctl.return_to_pool(0, millis(3));
  EXPECT_TRUE(rig.ctl.chain(0).active.empty());
  EXPECT_DOUBLE_EQ(rig.ctl.instance_rate(0), 0.0);
  EXPECT_EQ(rig.ctl.chain(0).idle, (std::vector<int>{0}));
}

TEST(WorkerLoad, SumsActiveLoadsOverCores) {
  FakeDeployer dep(1, 4);
  Controller ctl(ScalingConfig{}, MonitorConfig{}, dep);
  ctl.add_logical_chain(chain_of(1), 0.5, 1000);
  ctl.scale_out(0, {});
  ctl.scale_out(0, {});
  ctl.set_active(0);
  ctl.set_active(1);
  ctl.on_stats_update(stats(0, 400));
  ctl.on_stats_update(stats(1, 800));
  EXPECT_DOUBLE_EQ(ctl.worker_load(0), (0.4 + 0.8) / 4);
}

struct LoopRig {
  explicit LoopRig(int cores) : worker(make_spec(cores)) {
    for (int i = 0; i < 2; ++i) {
      sgroups.push_back(SGroup::from_chain(i, 0, 0, chain_of(2)));
      worker.cores[0].register_sgroup(sgroups.back());
      worker.instances.push_back(i);
    }
  }
  static WorkerSpec make_spec(int cores) {
    WorkerSpec ws;
    ws.num_cores = cores;
    return ws;
  }
  Worker worker;
  std::vector<SGroup> sgroups;
};

TEST(LoopStep, ActiveSgroupAttachedNextStep) {
  LoopRig rig(2);
  rig.sgroups[0].active = true;
  auto r = scheduler_loop_step(rig.worker, rig.sgroups);
  ASSERT_EQ(r.attached.size(), 1u);
  EXPECT_EQ(r.attached[0].first, 0);
  EXPECT_EQ(rig.sgroups[0].state, SGroupState::kAttached);
  EXPECT_EQ(rig.worker.attached_cores(), 1);
}

TEST(LoopStep, InactiveSgroupDetachedAndCoreReclaimed) {
  LoopRig rig(2);
  rig.sgroups[0].active = true;
  scheduler_loop_step(rig.worker, rig.sgroups);
  rig.sgroups[0].active = false;
  auto r = scheduler_loop_step(rig.worker, rig.sgroups);
  EXPECT_EQ(r.detached, (std::vector<int>{0}));
  EXPECT_EQ(rig.worker.attached_cores(), 0);
}

TEST(LoopStep, TwoActivationsOneIdleCore) {
  LoopRig rig(1);
  rig.sgroups[0].active = true;
  rig.sgroups[1].active = true;
  auto r = scheduler_loop_step(rig.worker, rig.sgroups);
  EXPECT_EQ(r.attached.size(), 1u);
  EXPECT_EQ(r.deferred, (std::vector<int>{1}));
}

TEST(LoopStep, IdempotentWithoutChanges) {
  LoopRig rig(2);
  rig.sgroups[1].active = true;
  EXPECT_TRUE(scheduler_loop_step(rig.worker, rig.sgroups).changed());
  auto second = scheduler_loop_step(rig.worker, rig.sgroups);
  EXPECT_FALSE(second.changed());
  EXPECT_TRUE(second.deferred.empty());
  EXPECT_EQ(rig.worker.attached_cores(), 1);
}

}  // namespace
}  // namespace quaysim
