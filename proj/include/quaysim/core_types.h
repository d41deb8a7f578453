#ifndef QUAYSIM_CORE_TYPES_H_
#define QUAYSIM_CORE_TYPES_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace quaysim {

// Simulated time in integer nanoseconds since the simulation epoch.
struct TimeNs {
  std::int64_t value = 0;

  constexpr auto operator<=>(const TimeNs&) const = default;
  constexpr TimeNs& operator+=(TimeNs o) {
    value += o.value;
    return *this;
  }
  friend constexpr TimeNs operator+(TimeNs a, TimeNs b) { return {a.value + b.value}; }
  friend constexpr TimeNs operator-(TimeNs a, TimeNs b) { return {a.value - b.value}; }
};

constexpr TimeNs nanos(std::int64_t n) { return {n}; }
constexpr TimeNs micros(std::int64_t us) { return {us * 1000}; }
constexpr TimeNs millis(std::int64_t ms) { return {ms * 1000 * 1000}; }
constexpr TimeNs seconds(std::int64_t s) { return {s * 1000 * 1000 * 1000}; }
inline double to_seconds(TimeNs t) { return static_cast<double>(t.value) * 1e-9; }

// CPU cycles.
struct Cycles {
  std::int64_t value = 0;

  constexpr auto operator<=>(const Cycles&) const = default;
  constexpr Cycles& operator+=(Cycles o) {
    value += o.value;
    return *this;
  }
  friend constexpr Cycles operator+(Cycles a, Cycles b) { return {a.value + b.value}; }
  friend constexpr Cycles operator-(Cycles a, Cycles b) { return {a.value - b.value}; }
  friend constexpr Cycles operator*(Cycles a, std::int64_t k) { return {a.value * k}; }
};

// round(c * 1e9 / freq_hz), half away from zero. Exact in integer arithmetic.
TimeNs cycles_to_ns(Cycles c, std::int64_t freq_hz);

struct FlowKey {
  std::uint32_t src_ip = 0;
  std::uint32_t dst_ip = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t proto = 0;

  bool operator==(const FlowKey&) const = default;
  std::string to_string() const;
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const noexcept;
};

std::string ipv4_to_string(std::uint32_t ip);
// Parses dotted-quad; returns nullopt on malformed input.
std::optional<std::uint32_t> parse_ipv4(const std::string& s);

constexpr int kMinPacketBytes = 64;
constexpr int kMaxPacketBytes = 1500;

// Identifies one packet buffer: the NIC (VF) buffer of a chain instance, which
// only the first NF may touch, or the instance's shared chain buffer.
struct BufferId {
  enum class Kind : std::uint8_t { kNic, kChain };
  Kind kind = Kind::kNic;
  int instance = -1;

  bool operator==(const BufferId&) const = default;
  std::string to_string() const;

  static BufferId nic(int instance) { return {Kind::kNic, instance}; }
  static BufferId chain(int instance) { return {Kind::kChain, instance}; }
};

struct PacketRec {
  std::uint64_t id = 0;
  std::uint64_t flow_id = 0;
  FlowKey flow;
  int size_bytes = kMinPacketBytes;
  TimeNs arrival_ts;  // arrival at the ingress
  BufferId owner;
};

// Per-packet service cost: base + per_byte * size, rounded to whole cycles.
struct CostModel {
  std::int64_t base_cycles = 0;
  double per_byte_cycles = 0.0;

  bool operator==(const CostModel&) const = default;
  Cycles at(int size_bytes) const;
};

struct NfProfile {
  std::string name;
  CostModel service_cost;
  bool stateful = false;
  // Fault injection: the NF never yields once it starts a batch.
  bool stuck = false;

  bool operator==(const NfProfile&) const = default;
};

// Prefix/range predicate over a flow key. Default-constructed matches all.
struct TrafficFilter {
  std::uint32_t src_prefix = 0;
  int src_len = 0;
  std::uint32_t dst_prefix = 0;
  int dst_len = 0;
  std::uint16_t dst_port_min = 0;
  std::uint16_t dst_port_max = 65535;
  std::optional<std::uint8_t> proto;

  bool operator==(const TrafficFilter&) const = default;
  bool matches(const FlowKey& k) const;
};

struct ChainSpec {
  int id = 0;
  std::string name;
  std::vector<NfProfile> nfs;
  TrafficFilter filter;
  TimeNs slo_p99 = micros(100);
  // Deployment knobs; when unset they are derived by profiling / batch sizing.
  std::optional<double> load_threshold;  // fraction of max_rate, e.g. 0.5
  std::optional<double> max_rate_pps;
  std::optional<int> batch_multiplier;

  bool operator==(const ChainSpec&) const = default;
};

struct WorkerSpec {
  int id = 0;
  int num_cores = 1;
  std::int64_t freq_hz = 2'400'000'000;
  std::int64_t nic_rate_bps = 10'000'000'000;
  int vf_queue_capacity = 128;
  int max_batch = 32;
  // Deployment slots (one VF per deployed chain instance).
  int max_sgroups = 64;

  bool operator==(const WorkerSpec&) const = default;
};

struct CostConstants {
  Cycles t_ctx{2143};
  int copy_small_bytes = 100;
  Cycles copy_small{247};
  int copy_large_bytes = 1500;
  Cycles copy_large{467};
  double per_hop_overhead = 50.8;  // cycles / packet / hop
  Cycles warmup_per_packet{100};   // charged once, at the first NF
  Cycles unmap{4083};
  Cycles map{8495};
  TimeNs yield_timeout = millis(10);

  bool operator==(const CostConstants&) const = default;
};

struct ScalingConfig {
  int scale_out_thresh = 1;
  int scale_in_thresh = 2;
  TimeNs install_latency = millis(5);
  TimeNs loop_period = millis(10);
  TimeNs idle_window = millis(100);
  double batch_ratio = 0.95;  // p in the batch-size constraint

  bool operator==(const ScalingConfig&) const = default;
};

struct MonitorConfig {
  TimeNs window = millis(10);
  double epsilon = 0.05;
  int queue_mark = 64;

  bool operator==(const MonitorConfig&) const = default;
};

struct StateConfig {
  TimeNs remote_latency_min = micros(310);
  TimeNs remote_latency_max = micros(310);
  TimeNs sync_period = millis(100);

  bool operator==(const StateConfig&) const = default;
};

struct ProfileConfig {
  std::vector<double> thresholds_pct;  // empty -> 10..85 step 5
  TimeNs warmup = millis(100);
  TimeNs hold = millis(300);

  bool operator==(const ProfileConfig&) const = default;
};

std::vector<double> default_profile_thresholds();

struct ClusterSpec {
  std::vector<WorkerSpec> workers;
  std::vector<ChainSpec> chains;
  CostConstants costs;
  ScalingConfig scaling;
  MonitorConfig monitor;
  StateConfig state;
  ProfileConfig profile;

  bool operator==(const ClusterSpec&) const = default;
};

struct ValidationResult {
  std::optional<ClusterSpec> spec;
  std::vector<std::string> errors;

  bool ok() const { return spec.has_value(); }
};

ValidationResult validate_cluster_spec(const ClusterSpec& spec);

}  // namespace quaysim

#endif  // QUAYSIM_CORE_TYPES_H_
