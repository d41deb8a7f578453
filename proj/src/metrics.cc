#include "quaysim/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace quaysim {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json latency_json(const LatencySummary& l) {
  ordered_json j;
  j["count"] = l.count;
  j["p50_ns"] = l.p50.value;
  j["p99_ns"] = l.p99.value;
  j["p999_ns"] = l.p999.value;
  j["max_ns"] = l.max.value;
  j["mean_ns"] = l.mean_ns;
  return j;
}

}  // namespace

std::string format_number(double x) { return ordered_json(x).dump(); }

std::int64_t percentile_nearest_rank(const std::vector<std::int64_t>& sorted, double q) {
  if (sorted.empty()) return 0;
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

LatencySummary summarize_latencies(std::vector<std::int64_t>& v) {
  LatencySummary s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  s.count = v.size();
  s.p50 = {percentile_nearest_rank(v, 50.0)};
  s.p99 = {percentile_nearest_rank(v, 99.0)};
  s.p999 = {percentile_nearest_rank(v, 99.9)};
  s.max = {v.back()};
  long double sum = 0;
  for (auto x : v) sum += x;
  s.mean_ns = static_cast<double>(sum / static_cast<long double>(v.size()));
  return s;
}

double MetricsReport::loss_rate() const {
  const std::uint64_t nfv = injected - bypass;
  if (nfv == 0) return 0.0;
  return static_cast<double>(dropped()) / static_cast<double>(nfv);
}

void check_conservation(const MetricsReport& r) {
  if (r.conserved()) return;
  std::ostringstream os;
  os << "packet conservation violated: injected=" << r.injected << " processed=" << r.processed
     << " dropped=" << r.dropped() << " in_flight=" << r.in_flight << " bypass=" << r.bypass;
  throw ConservationError(os.str());
}

void write_metrics_json(std::ostream& os, const MetricsReport& r) {
  ordered_json j;
  j["seed"] = r.seed;
  j["traffic_end_ns"] = r.traffic_end.value;
  j["sim_end_ns"] = r.sim_end.value;
  j["flows"] = r.flows;
  j["injected"] = r.injected;
  j["processed"] = r.processed;
  j["dropped"] = {{"vf_overflow", r.dropped_vf},
                  {"rejected", r.dropped_rejected},
                  {"timeout", r.dropped_timeout},
                  {"total", r.dropped()}};
  j["in_flight"] = r.in_flight;
  j["bypass"] = r.bypass;
  j["loss_rate"] = r.loss_rate();
  j["latency"] = latency_json(r.latency);
  j["copies"] = r.copies;
  j["ctx_switches"] = r.ctx_switches;
  j["rounds"] = r.rounds;
  j["avg_cores"] = r.avg_cores;
  j["max_cores"] = r.max_cores;
  j["max_queue_len"] = r.max_queue_len;
  j["monitor"] = {{"accepted", r.monitor_accepted}, {"suppressed", r.monitor_suppressed}};
  ordered_json v;
  v["total"] = r.violations;
  for (const auto& [k, n] : r.violations_by_kind) v[k] = n;
  j["isolation_violations"] = v;
  j["order_violations"] = r.order_violations;
  ordered_json f = ordered_json::object();
  for (const auto& [k, n] : r.faults) f[k] = n;
  j["faults"] = f;
  j["rule_installs"] = r.rule_installs;
  j["state"] = {{"fetches", r.state_fetches}, {"syncs", r.state_syncs}};
  ordered_json chains = ordered_json::array();
  for (const auto& c : r.chains) {
    ordered_json cj;
    cj["chain_id"] = c.chain_id;
    cj["name"] = c.name;
    cj["threshold"] = c.threshold;
    cj["threshold_feasible"] = c.threshold_feasible;
    cj["max_rate_pps"] = c.max_rate_pps;
    cj["batch_multiplier"] = c.batch_multiplier;
    cj["injected"] = c.injected;
    cj["processed"] = c.processed;
    cj["dropped"] = c.dropped;
    cj["latency"] = latency_json(c.latency);
    cj["copies"] = c.copies;
    cj["first_nf_packets"] = c.first_nf_packets;
    cj["ctx_switches"] = c.ctx_switches;
    cj["rounds"] = c.rounds;
    cj["avg_cores"] = c.avg_cores;
    cj["max_cores"] = c.max_cores;
    cj["peak_instances"] = c.peak_instances;
    cj["max_queue_len"] = c.max_queue_len;
    cj["rate_pps"] = c.rate_pps;
    chains.push_back(std::move(cj));
  }
  j["chains"] = std::move(chains);
  os << j.dump(2) << '\n';
}

void write_metrics_csv(std::ostream& os, const MetricsReport& r) {
  os << "chain_id,name,processed,dropped,p50_ns,p99_ns,p999_ns,copies,ctx_switches,avg_cores,"
        "max_cores,max_queue_len\n";
  for (const auto& c : r.chains) {
    os << c.chain_id << ',' << c.name << ',' << c.processed << ',' << c.dropped << ','
       << c.latency.p50.value << ',' << c.latency.p99.value << ',' << c.latency.p999.value << ','
       << c.copies << ',' << c.ctx_switches << ',' << format_number(c.avg_cores) << ',' << c.max_cores << ','
       << c.max_queue_len << '\n';
  }
  os << "all,all," << r.processed << ',' << r.dropped() << ',' << r.latency.p50.value << ','
     << r.latency.p99.value << ',' << r.latency.p999.value << ',' << r.copies << ','
     << r.ctx_switches << ',' << format_number(r.avg_cores) << ',' << r.max_cores << ',' << r.max_queue_len
     << '\n';
}

std::string format_us(TimeNs t) {
  const std::int64_t v = t.value;
  const std::int64_t a = v < 0 ? -v : v;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%lld.%03lld", v < 0 ? "-" : "", static_cast<long long>(a / 1000),
                static_cast<long long>(a % 1000));
  return buf;
}

void write_summary_table(std::ostream& os, const MetricsReport& r) {
  os << std::left << std::setw(14) << "chain" << std::right << std::setw(12) << "p50_us"
     << std::setw(12) << "p99_us" << std::setw(12) << "processed" << std::setw(10) << "dropped"
     << ' ' << std::setw(11) << "avg_cores" << ' ' << std::setw(9) << "max_cores" << std::setw(12) << "copies"
     << std::setw(12) << "ctx_sw" << '\n';
  auto row = [&](const std::string& name, const LatencySummary& l, std::uint64_t processed,
                 std::uint64_t dropped, double avg, int maxc, std::uint64_t copies,
                 std::uint64_t ctx) {
    os << std::left << std::setw(14) << name << std::right << std::setw(12) << format_us(l.p50)
       << std::setw(12) << format_us(l.p99) << std::setw(12) << processed << std::setw(10)
       << dropped << ' ' << std::setw(11) << std::fixed << std::setprecision(3) << avg
       << std::defaultfloat << ' ' << std::setw(9) << maxc << std::setw(12) << copies
       << std::setw(12) << ctx << '\n';
  };
  for (const auto& c : r.chains) {
    row(c.name, c.latency, c.processed, c.dropped, c.avg_cores, c.max_cores, c.copies,
        c.ctx_switches);
  }
  row("all", r.latency, r.processed, r.dropped(), r.avg_cores, r.max_cores, r.copies,
      r.ctx_switches);
  os << "injected " << r.injected << ", bypass " << r.bypass << ", in_flight " << r.in_flight
     << ", loss_rate " << format_number(r.loss_rate()) << '\n';
  os << "isolation violations " << r.violations << ", order violations " << r.order_violations
     << ", monitor updates accepted " << r.monitor_accepted << " suppressed "
     << r.monitor_suppressed << '\n';
  if (!r.faults.empty()) {
    os << "faults:";
    for (const auto& [k, n] : r.faults) os << ' ' << k << '=' << n;
    os << '\n';
  }
}

}  // namespace quaysim
