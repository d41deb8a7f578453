#include "quaysim/scenario_io.h"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace quaysim {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string at_index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) fail(join(path, k), "unknown key");
  }
}

const json& expect_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

std::int64_t integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) {
    if (j.is_number_float()) {
      const double v = j.get<double>();
      if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
    }
    fail(path, "expected an integer");
  }
  if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    fail(path, "integer out of range");
  }
  return j.get<std::int64_t>();
}

int int32(const json& j, const std::string& path) {
  const auto v = integer(j, path);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(path, "integer out of range");
  return static_cast<int>(v);
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

// Reads an optional member into out.
template <typename F>
void opt(const json& obj, const std::string& path, const char* key, F&& read) {
  auto it = obj.find(key);
  if (it != obj.end()) read(*it, join(path, key));
}

TimeNs time_from(double v, double unit_ns, const std::string& path) {
  const double ns = v * unit_ns;
  if (!(std::abs(ns) < 9e18)) fail(path, "time out of range");
  return TimeNs{std::llround(ns)};
}

void read_time(const json& obj, const std::string& path, const char* key, double unit_ns, TimeNs& out) {
  opt(obj, path, key, [&](const json& j, const std::string& p) { out = time_from(number(j, p), unit_ns, p); });
}

constexpr double kUs = 1e3;
constexpr double kMs = 1e6;
constexpr double kS = 1e9;

double in_unit(TimeNs t, double unit_ns) { return static_cast<double>(t.value) / unit_ns; }

std::pair<std::uint32_t, int> parse_prefix(const std::string& s, const std::string& path) {
  const auto slash = s.find('/');
  const std::string ip = s.substr(0, slash);
  int len = 32;
  if (slash != std::string::npos) {
    const std::string l = s.substr(slash + 1);
    if (l.empty() || l.size() > 2 || l.find_first_not_of("0123456789") != std::string::npos) {
      fail(path, "malformed prefix length in '" + s + "'");
    }
    len = std::stoi(l);
    if (len > 32) fail(path, "prefix length above 32 in '" + s + "'");
  }
  auto addr = parse_ipv4(ip);
  if (!addr) fail(path, "malformed IPv4 address in '" + s + "'");
  return {*addr, len};
}

std::string prefix_string(std::uint32_t ip, int len) {
  return ipv4_to_string(ip) + "/" + std::to_string(len);
}

FlowKey parse_key(const json& j, const std::string& path) {
  expect_object(j, path, {"src", "dst", "sport", "dport", "proto"});
  FlowKey k;
  auto ip = [&](const char* key, std::uint32_t& out) {
    opt(j, path, key, [&](const json& v, const std::string& p) {
      auto a = parse_ipv4(string(v, p));
      if (!a) fail(p, "malformed IPv4 address");
      out = *a;
    });
  };
  auto port = [&](const char* key, std::uint16_t& out) {
    opt(j, path, key, [&](const json& v, const std::string& p) {
      const auto x = integer(v, p);
      if (x < 0 || x > 65535) fail(p, "port outside [0, 65535]");
      out = static_cast<std::uint16_t>(x);
    });
  };
  ip("src", k.src_ip);
  ip("dst", k.dst_ip);
  port("sport", k.src_port);
  port("dport", k.dst_port);
  opt(j, path, "proto", [&](const json& v, const std::string& p) {
    const auto x = integer(v, p);
    if (x < 0 || x > 255) fail(p, "proto outside [0, 255]");
    k.proto = static_cast<std::uint8_t>(x);
  });
  return k;
}

ordered_json key_json(const FlowKey& k) {
  return {{"src", ipv4_to_string(k.src_ip)}, {"dst", ipv4_to_string(k.dst_ip)},
          {"sport", k.src_port},             {"dport", k.dst_port},
          {"proto", k.proto}};
}

WorkerSpec parse_worker(const json& j, const std::string& path, std::size_t index) {
  expect_object(j, path, {"id", "cores", "freq_ghz", "nic_gbps", "vf_queue_capacity", "max_batch", "max_sgroups"});
  WorkerSpec w;
  w.id = static_cast<int>(index);
  opt(j, path, "id", [&](const json& v, const std::string& p) { w.id = int32(v, p); });
  opt(j, path, "cores", [&](const json& v, const std::string& p) { w.num_cores = int32(v, p); });
  opt(j, path, "freq_ghz", [&](const json& v, const std::string& p) {
    w.freq_hz = std::llround(number(v, p) * 1e9);
  });
  opt(j, path, "nic_gbps", [&](const json& v, const std::string& p) {
    w.nic_rate_bps = std::llround(number(v, p) * 1e9);
  });
  opt(j, path, "vf_queue_capacity", [&](const json& v, const std::string& p) { w.vf_queue_capacity = int32(v, p); });
  opt(j, path, "max_batch", [&](const json& v, const std::string& p) { w.max_batch = int32(v, p); });
  opt(j, path, "max_sgroups", [&](const json& v, const std::string& p) { w.max_sgroups = int32(v, p); });
  return w;
}

NfProfile parse_nf(const json& j, const std::string& path) {
  expect_object(j, path, {"name", "cycles", "cycles_per_byte", "stateful", "stuck"});
  NfProfile nf;
  if (!j.contains("cycles")) fail(join(path, "cycles"), "required");
  opt(j, path, "name", [&](const json& v, const std::string& p) { nf.name = string(v, p); });
  opt(j, path, "cycles", [&](const json& v, const std::string& p) { nf.service_cost.base_cycles = integer(v, p); });
  opt(j, path, "cycles_per_byte", [&](const json& v, const std::string& p) {
    nf.service_cost.per_byte_cycles = number(v, p);
  });
  opt(j, path, "stateful", [&](const json& v, const std::string& p) { nf.stateful = boolean(v, p); });
  opt(j, path, "stuck", [&](const json& v, const std::string& p) { nf.stuck = boolean(v, p); });
  return nf;
}

TrafficFilter parse_filter(const json& j, const std::string& path) {
  expect_object(j, path, {"src", "dst", "dst_ports", "proto"});
  TrafficFilter f;
  opt(j, path, "src", [&](const json& v, const std::string& p) {
    std::tie(f.src_prefix, f.src_len) = parse_prefix(string(v, p), p);
  });
  opt(j, path, "dst", [&](const json& v, const std::string& p) {
    std::tie(f.dst_prefix, f.dst_len) = parse_prefix(string(v, p), p);
  });
  opt(j, path, "dst_ports", [&](const json& v, const std::string& p) {
    expect_array(v, p);
    if (v.size() != 2) fail(p, "expected [min, max]");
    const auto lo = integer(v[0], at_index(p, 0)), hi = integer(v[1], at_index(p, 1));
    if (lo < 0 || hi > 65535) fail(p, "port outside [0, 65535]");
    f.dst_port_min = static_cast<std::uint16_t>(lo);
    f.dst_port_max = static_cast<std::uint16_t>(hi);
  });
  opt(j, path, "proto", [&](const json& v, const std::string& p) {
    const auto x = integer(v, p);
    if (x < 0 || x > 255) fail(p, "proto outside [0, 255]");
    f.proto = static_cast<std::uint8_t>(x);
  });
  return f;
}

ChainSpec parse_chain(const json& j, const std::string& path, std::size_t index) {
  expect_object(j, path, {"id", "name", "nfs", "filter", "slo_p99_us", "load_threshold", "max_rate_pps", "batch_multiplier"});
  ChainSpec c;
  c.id = static_cast<int>(index);
  opt(j, path, "id", [&](const json& v, const std::string& p) { c.id = int32(v, p); });
  c.name = "chain" + std::to_string(c.id);
  opt(j, path, "name", [&](const json& v, const std::string& p) { c.name = string(v, p); });
  if (!j.contains("nfs")) fail(join(path, "nfs"), "required");
  const auto& nfs = expect_array(j["nfs"], join(path, "nfs"));
  for (std::size_t i = 0; i < nfs.size(); ++i) c.nfs.push_back(parse_nf(nfs[i], at_index(join(path, "nfs"), i)));
  opt(j, path, "filter", [&](const json& v, const std::string& p) { c.filter = parse_filter(v, p); });
  read_time(j, path, "slo_p99_us", kUs, c.slo_p99);
  opt(j, path, "load_threshold", [&](const json& v, const std::string& p) { c.load_threshold = number(v, p); });
  opt(j, path, "max_rate_pps", [&](const json& v, const std::string& p) { c.max_rate_pps = number(v, p); });
  opt(j, path, "batch_multiplier", [&](const json& v, const std::string& p) { c.batch_multiplier = int32(v, p); });
  return c;
}

TrafficModel parse_traffic(const json& j, const std::string& path) {
  expect_object(j, path, {"flow_rate", "ramp_s", "flow_duration_mean_s", "flow_duration_min_s", "pps_min", "pps_max",
                          "sizes", "dst_blocks", "proto", "packet_budget", "static_flows"});
  TrafficModel m;
  opt(j, path, "flow_rate", [&](const json& v, const std::string& p) { m.flow_rate = number(v, p); });
  read_time(j, path, "ramp_s", kS, m.ramp);
  read_time(j, path, "flow_duration_mean_s", kS, m.flow_duration_mean);
  read_time(j, path, "flow_duration_min_s", kS, m.flow_duration_min);
  opt(j, path, "pps_min", [&](const json& v, const std::string& p) { m.pps_min = number(v, p); });
  opt(j, path, "pps_max", [&](const json& v, const std::string& p) { m.pps_max = number(v, p); });
  if (j.contains("pps_min") && !j.contains("pps_max")) m.pps_max = m.pps_min;
  opt(j, path, "sizes", [&](const json& v, const std::string& p) {
    expect_array(v, p);
    m.sizes.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string ip = at_index(p, i);
      expect_object(v[i], ip, {"bytes", "weight"});
      SizeWeight s;
      if (!v[i].contains("bytes")) fail(join(ip, "bytes"), "required");
      s.size_bytes = int32(v[i]["bytes"], join(ip, "bytes"));
      opt(v[i], ip, "weight", [&](const json& w, const std::string& wp) { s.weight = number(w, wp); });
      m.sizes.push_back(s);
    }
  });
  opt(j, path, "dst_blocks", [&](const json& v, const std::string& p) {
    expect_array(v, p);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string ip = at_index(p, i);
      expect_object(v[i], ip, {"prefix", "weight"});
      DstBlock b;
      if (!v[i].contains("prefix")) fail(join(ip, "prefix"), "required");
      std::tie(b.prefix, b.len) = parse_prefix(string(v[i]["prefix"], join(ip, "prefix")), join(ip, "prefix"));
      opt(v[i], ip, "weight", [&](const json& w, const std::string& wp) { b.weight = number(w, wp); });
      m.dst_blocks.push_back(b);
    }
  });
  opt(j, path, "proto", [&](const json& v, const std::string& p) {
    const auto x = integer(v, p);
    if (x < 0 || x > 255) fail(p, "proto outside [0, 255]");
    m.proto = static_cast<std::uint8_t>(x);
  });
  opt(j, path, "packet_budget", [&](const json& v, const std::string& p) {
    const auto x = integer(v, p);
    if (x < 0) fail(p, "must be >= 0");
    m.packet_budget = static_cast<std::uint64_t>(x);
  });
  opt(j, path, "static_flows", [&](const json& v, const std::string& p) {
    expect_array(v, p);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string ip = at_index(p, i);
      expect_object(v[i], ip, {"key", "start_s", "duration_s", "pps", "bytes"});
      StaticFlow f;
      opt(v[i], ip, "key", [&](const json& k, const std::string& kp) { f.key = parse_key(k, kp); });
      read_time(v[i], ip, "start_s", kS, f.start);
      read_time(v[i], ip, "duration_s", kS, f.duration);
      opt(v[i], ip, "pps", [&](const json& x, const std::string& xp) { f.pps = number(x, xp); });
      opt(v[i], ip, "bytes", [&](const json& x, const std::string& xp) { f.size_bytes = int32(x, xp); });
      m.static_flows.push_back(f);
    }
  });
  return m;
}

Scenario from_json(const json& root) {
  expect_object(root, "", {"run", "cluster", "chains", "traffic", "costs", "scaling", "monitoring", "state", "profile", "output"});
  Scenario s;
  ClusterSpec& c = s.cluster;
  opt(root, "", "run", [&](const json& j, const std::string& p) {
    expect_object(j, p, {"duration_s", "drain_ms", "measure_from_s", "seed"});
    read_time(j, p, "duration_s", kS, s.duration);
    read_time(j, p, "drain_ms", kMs, s.drain_limit);
    read_time(j, p, "measure_from_s", kS, s.measure_from);
    opt(j, p, "seed", [&](const json& v, const std::string& vp) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        fail(vp, "expected a non-negative integer");
      }
      s.seed = v.get<std::uint64_t>();
    });
  });
  if (!root.contains("cluster")) fail("cluster", "required");
  {
    const json& j = root["cluster"];
    expect_object(j, "cluster", {"workers"});
    if (!j.contains("workers")) fail("cluster.workers", "required");
    const auto& ws = expect_array(j["workers"], "cluster.workers");
    for (std::size_t i = 0; i < ws.size(); ++i) c.workers.push_back(parse_worker(ws[i], at_index("cluster.workers", i), i));
  }
  if (!root.contains("chains")) fail("chains", "required");
  {
    const auto& cs = expect_array(root["chains"], "chains");
    for (std::size_t i = 0; i < cs.size(); ++i) c.chains.push_back(parse_chain(cs[i], at_index("chains", i), i));
  }
  opt(root, "", "traffic", [&](const json& j, const std::string& p) { s.traffic = parse_traffic(j, p); });
  opt(root, "", "costs", [&](const json& j, const std::string& p) {
    expect_object(j, p, {"t_ctx", "copy_small_bytes", "copy_small", "copy_large_bytes", "copy_large", "per_hop_overhead",
                         "warmup_per_packet", "unmap", "map", "yield_timeout_ms"});
    auto cyc = [&](const char* key, Cycles& out) {
      opt(j, p, key, [&](const json& v, const std::string& vp) { out = Cycles{integer(v, vp)}; });
    };
    cyc("t_ctx", c.costs.t_ctx);
    opt(j, p, "copy_small_bytes", [&](const json& v, const std::string& vp) { c.costs.copy_small_bytes = int32(v, vp); });
    cyc("copy_small", c.costs.copy_small);
    opt(j, p, "copy_large_bytes", [&](const json& v, const std::string& vp) { c.costs.copy_large_bytes = int32(v, vp); });
    cyc("copy_large", c.costs.copy_large);
    opt(j, p, "per_hop_overhead", [&](const json& v, const std::string& vp) { c.costs.per_hop_overhead = number(v, vp); });
    cyc("warmup_per_packet", c.costs.warmup_per_packet);
    cyc("unmap", c.costs.unmap);
    cyc("map", c.costs.map);
    read_time(j, p, "yield_timeout_ms", kMs, c.costs.yield_timeout);
  });
  opt(root, "", "scaling", [&](const json& j, const std::string& p) {
    expect_object(j, p, {"scale_out_thresh", "scale_in_thresh", "install_latency_ms", "loop_period_ms", "idle_window_ms",
                         "batch_ratio"});
    opt(j, p, "scale_out_thresh", [&](const json& v, const std::string& vp) { c.scaling.scale_out_thresh = int32(v, vp); });
    opt(j, p, "scale_in_thresh", [&](const json& v, const std::string& vp) { c.scaling.scale_in_thresh = int32(v, vp); });
    read_time(j, p, "install_latency_ms", kMs, c.scaling.install_latency);
    read_time(j, p, "loop_period_ms", kMs, c.scaling.loop_period);
    read_time(j, p, "idle_window_ms", kMs, c.scaling.idle_window);
    opt(j, p, "batch_ratio", [&](const json& v, const std::string& vp) { c.scaling.batch_ratio = number(v, vp); });
  });
  opt(root, "", "monitoring", [&](const json& j, const std::string& p) {
    expect_object(j, p, {"window_ms", "epsilon", "queue_mark"});
    read_time(j, p, "window_ms", kMs, c.monitor.window);
    opt(j, p, "epsilon", [&](const json& v, const std::string& vp) { c.monitor.epsilon = number(v, vp); });
    opt(j, p, "queue_mark", [&](const json& v, const std::string& vp) { c.monitor.queue_mark = int32(v, vp); });
  });
  opt(root, "", "state", [&](const json& j, const std::string& p) {
    expect_object(j, p, {"remote_latency_min_us", "remote_latency_max_us", "sync_period_ms"});
    read_time(j, p, "remote_latency_min_us", kUs, c.state.remote_latency_min);
    read_time(j, p, "remote_latency_max_us", kUs, c.state.remote_latency_max);
    if (j.contains("remote_latency_min_us") && !j.contains("remote_latency_max_us")) {
      c.state.remote_latency_max = c.state.remote_latency_min;
    }
    read_time(j, p, "sync_period_ms", kMs, c.state.sync_period);
  });
  opt(root, "", "profile", [&](const json& j, const std::string& p) {
    expect_object(j, p, {"thresholds_pct", "warmup_ms", "hold_ms"});
    opt(j, p, "thresholds_pct", [&](const json& v, const std::string& vp) {
      expect_array(v, vp);
      for (std::size_t i = 0; i < v.size(); ++i) c.profile.thresholds_pct.push_back(number(v[i], at_index(vp, i)));
    });
    read_time(j, p, "warmup_ms", kMs, c.profile.warmup);
    read_time(j, p, "hold_ms", kMs, c.profile.hold);
  });
  opt(root, "", "output", [&](const json& j, const std::string& p) {
    expect_object(j, p, {"rounds_trace", "ledger_log", "event_times", "flow_departures"});
    opt(j, p, "rounds_trace", [&](const json& v, const std::string& vp) { s.output.keep_rounds = boolean(v, vp); });
    opt(j, p, "ledger_log", [&](const json& v, const std::string& vp) { s.output.ledger_log = boolean(v, vp); });
    opt(j, p, "event_times", [&](const json& v, const std::string& vp) { s.output.keep_event_times = boolean(v, vp); });
    opt(j, p, "flow_departures", [&](const json& v, const std::string& vp) {
      s.output.keep_flow_departures = boolean(v, vp);
    });
  });

  auto v = validate_cluster_spec(c);
  if (!v.ok()) {
    std::string msg = "scenario does not validate:";
    for (const auto& e : v.errors) msg += "\n  " + e;
    throw ScenarioError(msg);
  }
  if (c.chains.empty()) fail("chains", "at least one chain required");
  try {
    check_traffic_model(s.traffic);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  if (s.duration.value < 0) fail("run.duration_s", "must be >= 0");
  if (s.drain_limit.value < 0) fail("run.drain_ms", "must be >= 0");
  if (s.measure_from.value < 0) fail("run.measure_from_s", "must be >= 0");
  return s;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    const auto pos = msg.find("] ");
    if (pos != std::string::npos) msg = msg.substr(pos + 2);
    throw ScenarioError(msg);
  }
  return from_json(root);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path + ": " + e.what());
  }
}

std::string dump_scenario(const Scenario& s) {
  ordered_json root;
  root["run"] = {{"duration_s", in_unit(s.duration, kS)},
                 {"drain_ms", in_unit(s.drain_limit, kMs)},
                 {"measure_from_s", in_unit(s.measure_from, kS)},
                 {"seed", s.seed}};
  const ClusterSpec& c = s.cluster;
  ordered_json workers = ordered_json::array();
  for (const auto& w : c.workers) {
    workers.push_back({{"id", w.id},
                       {"cores", w.num_cores},
                       {"freq_ghz", static_cast<double>(w.freq_hz) / 1e9},
                       {"nic_gbps", static_cast<double>(w.nic_rate_bps) / 1e9},
                       {"vf_queue_capacity", w.vf_queue_capacity},
                       {"max_batch", w.max_batch},
                       {"max_sgroups", w.max_sgroups}});
  }
  root["cluster"] = {{"workers", workers}};
  ordered_json chains = ordered_json::array();
  for (const auto& ch : c.chains) {
    ordered_json cj;
    cj["id"] = ch.id;
    cj["name"] = ch.name;
    ordered_json nfs = ordered_json::array();
    for (const auto& nf : ch.nfs) {
      nfs.push_back({{"name", nf.name},
                     {"cycles", nf.service_cost.base_cycles},
                     {"cycles_per_byte", nf.service_cost.per_byte_cycles},
                     {"stateful", nf.stateful},
                     {"stuck", nf.stuck}});
    }
    cj["nfs"] = nfs;
    ordered_json fj;
    fj["src"] = prefix_string(ch.filter.src_prefix, ch.filter.src_len);
    fj["dst"] = prefix_string(ch.filter.dst_prefix, ch.filter.dst_len);
    fj["dst_ports"] = {ch.filter.dst_port_min, ch.filter.dst_port_max};
    if (ch.filter.proto) fj["proto"] = *ch.filter.proto;
    cj["filter"] = fj;
    cj["slo_p99_us"] = in_unit(ch.slo_p99, kUs);
    if (ch.load_threshold) cj["load_threshold"] = *ch.load_threshold;
    if (ch.max_rate_pps) cj["max_rate_pps"] = *ch.max_rate_pps;
    if (ch.batch_multiplier) cj["batch_multiplier"] = *ch.batch_multiplier;
    chains.push_back(cj);
  }
  root["chains"] = chains;
  const TrafficModel& t = s.traffic;
  ordered_json tj;
  tj["flow_rate"] = t.flow_rate;
  tj["ramp_s"] = in_unit(t.ramp, kS);
  tj["flow_duration_mean_s"] = in_unit(t.flow_duration_mean, kS);
  tj["flow_duration_min_s"] = in_unit(t.flow_duration_min, kS);
  tj["pps_min"] = t.pps_min;
  tj["pps_max"] = t.pps_max;
  ordered_json sizes = ordered_json::array();
  for (const auto& sw : t.sizes) sizes.push_back({{"bytes", sw.size_bytes}, {"weight", sw.weight}});
  tj["sizes"] = sizes;
  ordered_json blocks = ordered_json::array();
  for (const auto& b : t.dst_blocks) blocks.push_back({{"prefix", prefix_string(b.prefix, b.len)}, {"weight", b.weight}});
  tj["dst_blocks"] = blocks;
  tj["proto"] = t.proto;
  tj["packet_budget"] = t.packet_budget;
  ordered_json statics = ordered_json::array();
  for (const auto& f : t.static_flows) {
    ordered_json fj2;
    if (f.key) fj2["key"] = key_json(*f.key);
    fj2["start_s"] = in_unit(f.start, kS);
    fj2["duration_s"] = in_unit(f.duration, kS);
    fj2["pps"] = f.pps;
    fj2["bytes"] = f.size_bytes;
    statics.push_back(fj2);
  }
  tj["static_flows"] = statics;
  root["traffic"] = tj;
  const CostConstants& k = c.costs;
  root["costs"] = {{"t_ctx", k.t_ctx.value},
                   {"copy_small_bytes", k.copy_small_bytes},
                   {"copy_small", k.copy_small.value},
                   {"copy_large_bytes", k.copy_large_bytes},
                   {"copy_large", k.copy_large.value},
                   {"per_hop_overhead", k.per_hop_overhead},
                   {"warmup_per_packet", k.warmup_per_packet.value},
                   {"unmap", k.unmap.value},
                   {"map", k.map.value},
                   {"yield_timeout_ms", in_unit(k.yield_timeout, kMs)}};
  root["scaling"] = {{"scale_out_thresh", c.scaling.scale_out_thresh},
                     {"scale_in_thresh", c.scaling.scale_in_thresh},
                     {"install_latency_ms", in_unit(c.scaling.install_latency, kMs)},
                     {"loop_period_ms", in_unit(c.scaling.loop_period, kMs)},
                     {"idle_window_ms", in_unit(c.scaling.idle_window, kMs)},
                     {"batch_ratio", c.scaling.batch_ratio}};
  root["monitoring"] = {{"window_ms", in_unit(c.monitor.window, kMs)},
                        {"epsilon", c.monitor.epsilon},
                        {"queue_mark", c.monitor.queue_mark}};
  root["state"] = {{"remote_latency_min_us", in_unit(c.state.remote_latency_min, kUs)},
                   {"remote_latency_max_us", in_unit(c.state.remote_latency_max, kUs)},
                   {"sync_period_ms", in_unit(c.state.sync_period, kMs)}};
  root["profile"] = {{"thresholds_pct", c.profile.thresholds_pct},
                     {"warmup_ms", in_unit(c.profile.warmup, kMs)},
                     {"hold_ms", in_unit(c.profile.hold, kMs)}};
  root["output"] = {{"rounds_trace", s.output.keep_rounds},
                    {"ledger_log", s.output.ledger_log},
                    {"event_times", s.output.keep_event_times},
                    {"flow_departures", s.output.keep_flow_departures}};
  return root.dump(2) + "\n";
}

}  // namespace quaysim
