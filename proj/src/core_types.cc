#include "quaysim/core_types.h"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace quaysim {

TimeNs cycles_to_ns(Cycles c, std::int64_t freq_hz) {
  if (freq_hz <= 0) throw std::invalid_argument("cycles_to_ns: freq_hz must be positive");
  if (c.value < 0) throw std::invalid_argument("cycles_to_ns: negative cycles");
  // (2*c*1e9 + f) / (2f) == round-half-up of c*1e9/f.
  const __int128 num = static_cast<__int128>(c.value) * 2'000'000'000 + freq_hz;
  const __int128 den = static_cast<__int128>(freq_hz) * 2;
  return {static_cast<std::int64_t>(num / den)};
}

std::string ipv4_to_string(std::uint32_t ip) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (ip >> 24) & 0xff, (ip >> 16) & 0xff,
                (ip >> 8) & 0xff, ip & 0xff);
  return buf;
}

std::optional<std::uint32_t> parse_ipv4(const std::string& s) {
  unsigned a, b, c, d;
  char tail;
  if (std::sscanf(s.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4) return std::nullopt;
  if (a > 255 || b > 255 || c > 255 || d > 255) return std::nullopt;
  return (a << 24) | (b << 16) | (c << 8) | d;
}

std::string FlowKey::to_string() const {
  std::ostringstream os;
  os << ipv4_to_string(src_ip) << ':' << src_port << "->" << ipv4_to_string(dst_ip) << ':'
     << dst_port << '/' << static_cast<int>(proto);
  return os.str();
}

std::size_t FlowKeyHash::operator()(const FlowKey& k) const noexcept {
  // splitmix64 finalizer over the packed tuple
  std::uint64_t x = (static_cast<std::uint64_t>(k.src_ip) << 32) | k.dst_ip;
  x ^= (static_cast<std::uint64_t>(k.src_port) << 24) ^
       (static_cast<std::uint64_t>(k.dst_port) << 8) ^ k.proto;
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return static_cast<std::size_t>(x ^ (x >> 31));
}

std::string BufferId::to_string() const {
  return (kind == Kind::kNic ? "nic:" : "chain:") + std::to_string(instance);
}

Cycles CostModel::at(int size_bytes) const {
  return {std::llround(static_cast<double>(base_cycles) + per_byte_cycles * size_bytes)};
}

namespace {

bool prefix_match(std::uint32_t addr, std::uint32_t prefix, int len) {
  if (len <= 0) return true;
  const std::uint32_t mask = len >= 32 ? 0xffffffffu : ~(0xffffffffu >> len);
  return (addr & mask) == (prefix & mask);
}

}  // namespace

bool TrafficFilter::matches(const FlowKey& k) const {
  if (!prefix_match(k.src_ip, src_prefix, src_len)) return false;
  if (!prefix_match(k.dst_ip, dst_prefix, dst_len)) return false;
  if (k.dst_port < dst_port_min || k.dst_port > dst_port_max) return false;
  if (proto && *proto != k.proto) return false;
  return true;
}

std::vector<double> default_profile_thresholds() {
  std::vector<double> t;
  for (int pct = 10; pct <= 85; pct += 5) t.push_back(pct);
  return t;
}

ValidationResult validate_cluster_spec(const ClusterSpec& spec) {
  std::vector<std::string> errs;
  auto err = [&errs](std::string msg) { errs.push_back(std::move(msg)); };

  if (spec.workers.empty()) err("cluster: no workers");
  std::set<int> worker_ids;
  for (const auto& w : spec.workers) {
    const std::string where = "worker " + std::to_string(w.id) + ": ";
    if (!worker_ids.insert(w.id).second) err(where + "duplicate id");
    if (w.num_cores < 1) err(where + "zero cores");
    if (w.freq_hz <= 0) err(where + "non-positive freq_hz");
    if (w.nic_rate_bps <= 0) err(where + "non-positive nic_rate_bps");
    if (w.vf_queue_capacity < 1) err(where + "vf_queue_capacity must be >= 1");
    if (w.max_batch < 1) err(where + "max_batch must be >= 1");
    if (w.max_sgroups < 1) err(where + "max_sgroups must be >= 1");
  }

  std::set<int> chain_ids;
  for (const auto& c : spec.chains) {
    const std::string where = "chain " + std::to_string(c.id) + ": ";
    if (!chain_ids.insert(c.id).second) err(where + "duplicate id");
    if (c.nfs.empty()) err(where + "empty chain");
    for (const auto& nf : c.nfs) {
      // Linear cost: positivity at both size bounds covers the whole range.
      if (nf.service_cost.at(kMinPacketBytes).value <= 0 ||
          nf.service_cost.at(kMaxPacketBytes).value <= 0) {
        err(where + "non-positive service cost for NF '" + nf.name + "'");
      }
    }
    if (c.slo_p99.value <= 0) err(where + "non-positive slo_p99");
    if (c.load_threshold && !(*c.load_threshold > 0.0)) err(where + "non-positive load_threshold");
    if (c.max_rate_pps && !(*c.max_rate_pps > 0.0)) err(where + "non-positive max_rate_pps");
    if (c.batch_multiplier && *c.batch_multiplier < 1) err(where + "batch_multiplier must be >= 1");
    const auto& f = c.filter;
    if (f.src_len < 0 || f.src_len > 32 || f.dst_len < 0 || f.dst_len > 32) {
      err(where + "filter prefix length out of [0, 32]");
    }
    if (f.dst_port_min > f.dst_port_max) err(where + "filter port range is empty");
  }

  const auto& k = spec.costs;
  if (k.t_ctx.value < 0) err("costs: negative t_ctx");
  if (k.copy_small.value <= 0 || k.copy_large.value <= 0) err("costs: non-positive copy cost");
  if (k.copy_small_bytes >= k.copy_large_bytes) err("costs: copy size anchors not increasing");
  if (k.copy_small > k.copy_large) err("costs: copy cost decreasing in size");
  if (k.per_hop_overhead < 0.0) err("costs: negative per_hop_overhead");
  if (k.warmup_per_packet.value < 0) err("costs: negative warmup");
  if (k.unmap.value < 0 || k.map.value < 0) err("costs: negative map/unmap cost");
  if (k.yield_timeout.value <= 0) err("costs: non-positive yield_timeout");

  const auto& s = spec.scaling;
  if (s.scale_out_thresh < 0) err("scaling: negative scale_out_thresh");
  if (s.scale_out_thresh > s.scale_in_thresh) err("scaling: scale_out_thresh > scale_in_thresh");
  if (s.install_latency.value < 0) err("scaling: negative install_latency");
  if (s.loop_period.value <= 0) err("scaling: non-positive loop_period");
  if (s.idle_window.value < 0) err("scaling: negative idle_window");
  if (!(s.batch_ratio > 0.0 && s.batch_ratio < 1.0)) err("scaling: batch_ratio outside (0, 1)");

  const auto& m = spec.monitor;
  if (m.window.value <= 0) err("monitor: non-positive window");
  if (m.epsilon < 0.0) err("monitor: negative epsilon");
  if (m.queue_mark < 1) err("monitor: queue_mark must be >= 1");

  const auto& st = spec.state;
  if (st.remote_latency_min.value < 0 || st.remote_latency_min > st.remote_latency_max) {
    err("state: invalid remote latency range");
  }
  if (st.sync_period.value < 0) err("state: negative sync_period");

  const auto& p = spec.profile;
  for (std::size_t i = 0; i < p.thresholds_pct.size(); ++i) {
    const double t = p.thresholds_pct[i];
    if (!(t > 0.0 && t <= 100.0)) err("profile: threshold outside (0, 100]");
    if (i > 0 && !(t > p.thresholds_pct[i - 1])) err("profile: thresholds not strictly increasing");
  }
  if (p.hold.value <= 0) err("profile: non-positive hold window");
  if (p.warmup.value < 0) err("profile: negative warmup");

  ValidationResult r;
  r.errors = std::move(errs);
  if (r.errors.empty()) r.spec = spec;
  return r;
}

}  // namespace quaysim
