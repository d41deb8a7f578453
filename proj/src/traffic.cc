#include "quaysim/traffic.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace quaysim {

void check_traffic_model(const TrafficModel& m) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("traffic: " + what); };
  if (m.flow_rate < 0.0) fail("flow_rate must be >= 0");
  if (m.ramp.value < 0) fail("ramp must be >= 0");
  if (m.flow_duration_mean.value <= 0) fail("flow duration mean must be > 0");
  if (m.flow_duration_min.value < 0) fail("flow duration min must be >= 0");
  if (!(m.pps_min > 0.0) || m.pps_max < m.pps_min) fail("need 0 < pps_min <= pps_max");
  if (m.sizes.empty()) fail("sizes must not be empty");
  double total = 0.0;
  for (const auto& s : m.sizes) {
    if (s.size_bytes < kMinPacketBytes || s.size_bytes > kMaxPacketBytes) {
      fail("packet size " + std::to_string(s.size_bytes) + " outside [64, 1500]");
    }
    if (s.weight < 0.0) fail("size weight must be >= 0");
    total += s.weight;
  }
  if (!(total > 0.0)) fail("size weights sum to zero");
  for (const auto& b : m.dst_blocks) {
    if (b.len < 0 || b.len > 32) fail("dst block prefix length outside [0, 32]");
    if (b.weight < 0.0) fail("dst block weight must be >= 0");
  }
  for (const auto& f : m.static_flows) {
    if (!(f.pps > 0.0)) fail("static flow pps must be > 0");
    if (f.start.value < 0 || f.duration.value <= 0) fail("static flow needs start >= 0, duration > 0");
    if (f.size_bytes < kMinPacketBytes || f.size_bytes > kMaxPacketBytes) {
      fail("static flow size outside [64, 1500]");
    }
  }
}

int median_packet_size(const TrafficModel& m) {
  std::vector<SizeWeight> s = m.sizes;
  std::sort(s.begin(), s.end(),
            [](const SizeWeight& a, const SizeWeight& b) { return a.size_bytes < b.size_bytes; });
  double total = 0.0;
  for (const auto& x : s) total += x.weight;
  double acc = 0.0;
  for (const auto& x : s) {
    acc += x.weight;
    if (acc >= total / 2.0) return x.size_bytes;
  }
  return s.back().size_bytes;
}

double mean_pps(const TrafficModel& m) { return (m.pps_min + m.pps_max) / 2.0; }

TimeNs packet_gap(double pps) {
  return {std::max<std::int64_t>(1, std::llround(1e9 / pps))};
}

TrafficGenerator::TrafficGenerator(const TrafficModel& model, std::uint64_t seed, TimeNs horizon)
    : model_(model),
      horizon_(horizon),
      arrivals_(derive_seed(seed, 1)),
      attrs_(derive_seed(seed, 2)) {
  check_traffic_model(model_);
  for (const auto& sf : model_.static_flows) {
    if (sf.start >= horizon_) continue;
    FlowSpec f;
    f.key = sf.key ? *sf.key : sample_key();
    f.start = sf.start;
    f.duration = sf.duration;
    f.pps = sf.pps;
    f.size_bytes = sf.size_bytes;
    f.gap = packet_gap(sf.pps);
    statics_.push_back(f);
  }
  std::stable_sort(statics_.begin(), statics_.end(),
                   [](const FlowSpec& a, const FlowSpec& b) { return a.start < b.start; });
  advance_poisson();
}

double TrafficGenerator::arrival_rate(TimeNs t) const {
  if (model_.ramp.value <= 0 || t >= model_.ramp) return model_.flow_rate;
  if (t.value <= 0) return 0.0;
  return model_.flow_rate * static_cast<double>(t.value) / static_cast<double>(model_.ramp.value);
}

void TrafficGenerator::advance_poisson() {
  next_poisson_.reset();
  if (!(model_.flow_rate > 0.0)) return;
  const double horizon_s = to_seconds(horizon_);
  while (true) {
    poisson_clock_s_ += arrivals_.exponential(1.0 / model_.flow_rate);
    if (poisson_clock_s_ >= horizon_s) return;
    const TimeNs t{std::llround(poisson_clock_s_ * 1e9)};
    if (arrivals_.uniform() * model_.flow_rate < arrival_rate(t)) {
      next_poisson_ = t;
      return;
    }
  }
}

FlowKey TrafficGenerator::sample_key() {
  FlowKey k;
  // The flow ordinal in the source address keeps sampled keys unique.
  k.src_ip = 0x0A000000u | static_cast<std::uint32_t>((statics_.size() + next_id_ + 1) & 0xFFFFFF);
  k.src_port = static_cast<std::uint16_t>(attrs_.uniform_int(1024, 65535));
  k.dst_port = static_cast<std::uint16_t>(attrs_.uniform_int(1, 65535));
  k.proto = model_.proto;
  std::uint32_t prefix = 0;
  int len = 0;
  if (!model_.dst_blocks.empty()) {
    double total = 0.0;
    for (const auto& b : model_.dst_blocks) total += b.weight;
    double x = attrs_.uniform() * total;
    const DstBlock* pick = &model_.dst_blocks.back();
    for (const auto& b : model_.dst_blocks) {
      if (x < b.weight) {
        pick = &b;
        break;
      }
      x -= b.weight;
    }
    prefix = pick->prefix;
    len = pick->len;
  }
  const std::uint32_t host_mask = len >= 32 ? 0u : (0xFFFFFFFFu >> len);
  const auto host = static_cast<std::uint32_t>(attrs_.next_u64());
  k.dst_ip = (prefix & ~host_mask) | (host & host_mask);
  return k;
}

int TrafficGenerator::sample_size() {
  double total = 0.0;
  for (const auto& s : model_.sizes) total += s.weight;
  double x = attrs_.uniform() * total;
  for (const auto& s : model_.sizes) {
    if (x < s.weight) return s.size_bytes;
    x -= s.weight;
  }
  return model_.sizes.back().size_bytes;
}

FlowSpec TrafficGenerator::sample_flow(TimeNs start) {
  FlowSpec f;
  f.key = sample_key();
  f.start = start;
  const double mean_s = to_seconds(model_.flow_duration_mean);
  const TimeNs d{std::llround(attrs_.exponential(mean_s) * 1e9)};
  f.duration = std::max(d, model_.flow_duration_min);
  if (f.duration.value <= 0) f.duration = nanos(1);
  f.pps = model_.pps_min == model_.pps_max ? model_.pps_min
                                           : attrs_.uniform(model_.pps_min, model_.pps_max);
  f.size_bytes = sample_size();
  f.gap = packet_gap(f.pps);
  return f;
}

std::optional<FlowSpec> TrafficGenerator::next_flow() {
  const bool have_static = static_pos_ < statics_.size();
  if (!have_static && !next_poisson_) return std::nullopt;
  FlowSpec f;
  if (have_static && (!next_poisson_ || statics_[static_pos_].start <= *next_poisson_)) {
    f = statics_[static_pos_++];
  } else {
    f = sample_flow(*next_poisson_);
    advance_poisson();
  }
  f.id = next_id_++;
  return f;
}

std::size_t concurrent_flows(const std::vector<FlowSpec>& flows, TimeNs t) {
  return static_cast<std::size_t>(std::count_if(flows.begin(), flows.end(), [t](const FlowSpec& f) {
    return f.start <= t && t < f.end();
  }));
}

}  // namespace quaysim
