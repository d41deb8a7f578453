#include <gtest/gtest.h>

#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "quaysim/engine.h"
#include "quaysim/metrics.h"
#include "quaysim/traffic.h"
#include "test_scenarios.h"

namespace quaysim {
namespace {

using testing::fixed_scenario;
using testing::static_flow;
using testing::uniform_chain;

TEST(Percentile, ConstantSample) {
  std::vector<std::int64_t> v(100, 10000);
  auto s = summarize_latencies(v);
  EXPECT_EQ(s.p50, micros(10));
  EXPECT_EQ(s.p99, micros(10));
  EXPECT_EQ(s.count, 100u);
}

TEST(Percentile, NearestRankOneToHundred) {
  std::vector<std::int64_t> v;
  for (int i = 100; i >= 1; --i) v.push_back(i * 1000);
  auto s = summarize_latencies(v);
  EXPECT_GE(s.p50.value, 50000);
  EXPECT_LE(s.p50.value, 51000);
  EXPECT_EQ(s.p99.value, 99000);
  EXPECT_EQ(s.max.value, 100000);
  EXPECT_DOUBLE_EQ(s.mean_ns, 50500.0);
  EXPECT_EQ(percentile_nearest_rank({}, 50), 0);
}

TEST(Traffic, ZeroRateProducesNoFlows) {
  TrafficModel m;
  TrafficGenerator g(m, 1, seconds(100));
  EXPECT_FALSE(g.next_flow());
}

TEST(Traffic, SameSeedSameStream) {
  TrafficModel m;
  m.flow_rate = 50;
  m.pps_min = 100;
  m.pps_max = 5000;
  m.sizes = {{64, 1}, {1500, 2}};
  TrafficGenerator a(m, 77, seconds(20)), b(m, 77, seconds(20));
  int n = 0;
  while (true) {
    auto x = a.next_flow();
    auto y = b.next_flow();
    ASSERT_EQ(x.has_value(), y.has_value());
    if (!x) break;
    EXPECT_EQ(x->key, y->key);
    EXPECT_EQ(x->start, y->start);
    EXPECT_EQ(x->duration, y->duration);
    EXPECT_EQ(x->size_bytes, y->size_bytes);
    EXPECT_DOUBLE_EQ(x->pps, y->pps);
    ++n;
  }
  EXPECT_GT(n, 800);
}

TEST(Traffic, FlowsInStartOrderWithUniqueKeys) {
  TrafficModel m;
  m.flow_rate = 30;
  m.ramp = seconds(5);
  m.static_flows.push_back(static_flow(1, millis(2500), seconds(1), 1000));
  TrafficGenerator g(m, 3, seconds(10));
  TimeNs prev;
  std::vector<FlowKey> keys;
  while (auto f = g.next_flow()) {
    EXPECT_GE(f->start, prev);
    prev = f->start;
    EXPECT_GE(f->duration, m.flow_duration_min);
    EXPECT_EQ(f->gap, packet_gap(f->pps));
    for (const auto& k : keys) EXPECT_FALSE(k == f->key);
    keys.push_back(f->key);
  }
  EXPECT_DOUBLE_EQ(g.arrival_rate(seconds(0)), 0.0);
  EXPECT_DOUBLE_EQ(g.arrival_rate(millis(2500)), 15.0);
  EXPECT_DOUBLE_EQ(g.arrival_rate(seconds(7)), 30.0);
}

TEST(Traffic, PeakConcurrencyNearTwelveHundred) {
  TrafficModel m;
  m.flow_rate = 20;
  m.flow_duration_mean = seconds(60);
  double total = 0;
  const int seeds = 5;
  for (int seed = 1; seed <= seeds; ++seed) {
    TrafficGenerator g(m, static_cast<std::uint64_t>(seed), seconds(400));
    std::vector<FlowSpec> flows;
    while (auto f = g.next_flow()) flows.push_back(*f);
    const double c = static_cast<double>(concurrent_flows(flows, seconds(400)));
    EXPECT_NEAR(c, 1200, 120) << "seed " << seed;
    total += c;
  }
  EXPECT_NEAR(total / seeds, 1200, 120);
}

TEST(Traffic, MedianSizeAndValidation) {
  TrafficModel m;
  m.sizes = {{64, 1}, {512, 1}, {1500, 3}};
  EXPECT_EQ(median_packet_size(m), 1500);
  m.sizes = {{64, 3}, {1500, 1}};
  EXPECT_EQ(median_packet_size(m), 64);
  m.sizes.clear();
  EXPECT_THROW(check_traffic_model(m), std::invalid_argument);
  m.sizes = {{32, 1}};
  EXPECT_THROW(check_traffic_model(m), std::invalid_argument);
}

TEST(Engine, ZeroTrafficAllZero) {
  Scenario s = fixed_scenario(uniform_chain(0, 3, 500));
  auto r = run_scenario(s);
  const auto& m = r.report;
  EXPECT_EQ(m.injected, 0u);
  EXPECT_EQ(m.processed, 0u);
  EXPECT_EQ(m.dropped(), 0u);
  EXPECT_EQ(m.copies, 0u);
  EXPECT_EQ(m.ctx_switches, 0u);
  EXPECT_EQ(m.rounds, 0u);
  EXPECT_DOUBLE_EQ(m.avg_cores, 0.0);
  EXPECT_EQ(m.max_cores, 0);
  EXPECT_EQ(m.latency.count, 0u);
}

TEST(Engine, PreDeployedDetachedSgroupsStayFree) {
  Scenario s = fixed_scenario(uniform_chain(0, 3, 500));
  s.cluster.scaling.scale_out_thresh = 5;
  s.cluster.scaling.scale_in_thresh = 5;
  auto r = run_scenario(s);
  ASSERT_FALSE(r.pool_trace.empty());
  EXPECT_EQ(r.pool_trace.back().idle, 5);
  EXPECT_TRUE(r.core_trace.empty());
  EXPECT_DOUBLE_EQ(r.report.avg_cores, 0.0);
  EXPECT_EQ(r.report.rounds, 0u);
}

TEST(Engine, SingleFlowLatencyIsServicePlusWarmup) {
  Scenario s = fixed_scenario(uniform_chain(0, 1, 1000));
  s.traffic.static_flows.push_back(static_flow(1, {}, seconds(1), 1000, 512));
  s.measure_from = millis(100);
  auto r = run_scenario(s);
  const auto& m = r.report;
  EXPECT_EQ(m.dropped(), 0u);
  const TimeNs oracle = cycles_to_ns({1000 + 100}, 2'400'000'000);
  EXPECT_EQ(m.latency.p50, oracle);
  EXPECT_EQ(m.latency.p99, oracle);
  EXPECT_EQ(m.latency.max, oracle);
  EXPECT_EQ(m.copies, 0u);
}

Scenario busy_scenario() {
  Scenario s;
  s.cluster.workers = {testing::worker(0, 4), testing::worker(1, 4)};
  ChainSpec a = uniform_chain(0, 3, 2000);
  a.filter.dst_port_min = 0;
  a.filter.dst_port_max = 30000;
  a.load_threshold = 0.7;
  ChainSpec b = uniform_chain(1, 1, 4000);
  b.filter.dst_port_min = 30001;
  b.filter.dst_port_max = 60000;
  b.load_threshold = 0.7;
  s.cluster.chains = {a, b};
  s.traffic.flow_rate = 40;
  s.traffic.ramp = millis(500);
  s.traffic.flow_duration_mean = seconds(1);
  s.traffic.pps_min = 2000;
  s.traffic.pps_max = 20000;
  s.traffic.sizes = {{64, 1}, {1024, 1}, {1500, 1}};
  s.duration = seconds(3);
  s.seed = 99;
  s.output.keep_event_times = true;
  s.output.keep_flow_departures = true;
  s.output.keep_rounds = true;
  return s;
}

TEST(Engine, ConservationOrderAndEventMonotonicity) {
  const auto r = run_scenario(busy_scenario());
  const auto& m = r.report;
  EXPECT_TRUE(m.conserved());
  EXPECT_GT(m.processed, 10000u);
  EXPECT_GT(m.bypass, 0u);
  EXPECT_EQ(m.order_violations, 0u);
  EXPECT_EQ(m.violations, 0u);
  EXPECT_TRUE(r.ledger.violations().empty());

  for (std::size_t i = 1; i < r.event_times.size(); ++i) {
    EXPECT_LE(r.event_times[i - 1], r.event_times[i]);
  }
  std::map<std::uint64_t, std::uint64_t> last;
  for (const auto& [flow, packet] : r.flow_departures) {
    auto it = last.find(flow);
    if (it != last.end()) {
      EXPECT_LT(it->second, packet);
    }
    last[flow] = packet;
  }

  std::uint64_t copies = 0, first = 0, switches = 0, rounds = 0;
  for (const auto& c : m.chains) {
    copies += c.copies;
    first += c.first_nf_packets;
    switches += c.ctx_switches;
    rounds += c.rounds;
  }
  EXPECT_EQ(m.chains[0].copies, m.chains[0].first_nf_packets);
  EXPECT_EQ(m.chains[1].copies, 0u);
  EXPECT_EQ(m.chains[1].ctx_switches, 0u);
  EXPECT_EQ(m.chains[0].ctx_switches, 3 * m.chains[0].rounds);
  EXPECT_EQ(copies, m.copies);
  EXPECT_EQ(switches, m.ctx_switches);
  EXPECT_EQ(rounds, m.rounds);
}

TEST(Engine, CoreUsageMatchesAttachTrace) {
  const auto r = run_scenario(busy_scenario());
  int attached = 0, peak = 0;
  double area = 0;
  TimeNs prev;
  for (const auto& e : r.core_trace) {
    if (e.at > r.report.traffic_end) break;
    area += attached * to_seconds(e.at - prev);
    prev = e.at;
    attached += e.attach ? 1 : -1;
    EXPECT_EQ(attached, e.attached_total);
    peak = std::max(peak, attached);
  }
  area += attached * to_seconds(r.report.traffic_end - prev);
  EXPECT_NEAR(r.report.avg_cores, area / to_seconds(r.report.traffic_end), 1e-9);
  EXPECT_GE(r.report.max_cores, peak);
  EXPECT_GT(peak, 0);
}

TEST(Engine, DeterministicAcrossRuns) {
  const auto a = run_scenario(busy_scenario());
  const auto b = run_scenario(busy_scenario());
  std::ostringstream ja, jb;
  write_metrics_json(ja, a.report);
  write_metrics_json(jb, b.report);
  EXPECT_EQ(ja.str(), jb.str());
  EXPECT_EQ(a.event_times, b.event_times);
  std::ostringstream ta, tb;
  write_trace_csv(ta, a.rounds);
  write_trace_csv(tb, b.rounds);
  EXPECT_EQ(ta.str(), tb.str());
}

TEST(Engine, StuckNfIsTerminatedAndCounted) {
  Scenario s = fixed_scenario(uniform_chain(0, 2, 500));
  s.cluster.chains[0].nfs[1].stuck = true;
  s.traffic.static_flows.push_back(static_flow(1, {}, millis(500), 2000));
  auto r = run_scenario(s);
  EXPECT_TRUE(r.report.conserved());
  EXPECT_GT(r.report.dropped_timeout, 0u);
  EXPECT_EQ(r.report.faults.count("yield_timeout"), 1u);
}

TEST(Engine, InvalidScenarioRejected) {
  Scenario s = fixed_scenario(uniform_chain(0, 0, 500));
  EXPECT_THROW(check_scenario(s), std::invalid_argument);
}

TEST(Metrics, WritersAgreeWithReport) {
  const auto r = run_scenario(busy_scenario());
  std::ostringstream csv, table;
  write_metrics_csv(csv, r.report);
  write_summary_table(table, r.report);
  EXPECT_NE(csv.str().find("all,all," + std::to_string(r.report.processed) + ","), std::string::npos);
  EXPECT_NE(table.str().find(format_us(r.report.latency.p99)), std::string::npos);
  char avg[32];
  std::snprintf(avg, sizeof avg, "%.3f", r.report.avg_cores);
  EXPECT_NE(table.str().find(avg), std::string::npos);
  EXPECT_EQ(format_us(nanos(12345)), "12.345");
  EXPECT_EQ(format_number(0.1), "0.1");
}

TEST(Metrics, ConservationCheckThrows) {
  MetricsReport m;
  m.injected = 10;
  m.processed = 9;
  EXPECT_THROW(check_conservation(m), ConservationError);
  m.in_flight = 1;
  EXPECT_NO_THROW(check_conservation(m));
}

}  // namespace
}  // namespace quaysim
