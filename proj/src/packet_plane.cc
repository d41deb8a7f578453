#include "quaysim/packet_plane.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace quaysim {

NicVfQueue::NicVfQueue(int instance, int capacity) : instance_(instance), capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("NicVfQueue: capacity must be >= 1");
}

bool NicVfQueue::enqueue(PacketRec p) {
  if (static_cast<int>(queue_.size()) >= capacity_) {
    ++drops_;
    return false;
  }
  p.owner = BufferId::nic(instance_);
  queue_.push_back(p);
  ++accepted_;
  return true;
}

std::vector<PacketRec> NicVfQueue::dma_batch(int b_m, OwnershipLedger& ledger, TimeNs now) {
  const std::size_t n = std::min<std::size_t>(queue_.size(), static_cast<std::size_t>(std::max(b_m, 0)));
  std::vector<PacketRec> batch(queue_.begin(), queue_.begin() + static_cast<std::ptrdiff_t>(n));
  queue_.erase(queue_.begin(), queue_.begin() + static_cast<std::ptrdiff_t>(n));
  for (const auto& p : batch) {
    ledger.record_delivery(now, Accessor{instance_, 0}, p.id, p.owner);
  }
  return batch;
}

std::vector<PacketRec> NicVfQueue::drain_all() {
  std::vector<PacketRec> out(queue_.begin(), queue_.end());
  queue_.clear();
  return out;
}

Cycles copy_cost(int size_bytes, const CostConstants& costs) {
  if (size_bytes < kMinPacketBytes || size_bytes > kMaxPacketBytes) {
    throw std::out_of_range("copy_cost: packet size " + std::to_string(size_bytes) +
                            " outside [64, 1500]");
  }
  if (size_bytes <= costs.copy_small_bytes) return costs.copy_small;
  if (size_bytes >= costs.copy_large_bytes) return costs.copy_large;
  const double slope = static_cast<double>(costs.copy_large.value - costs.copy_small.value) /
                       (costs.copy_large_bytes - costs.copy_small_bytes);
  return {costs.copy_small.value +
          std::llround(slope * (size_bytes - costs.copy_small_bytes))};
}

Cycles ChainPacketBuffer::copy_in(std::vector<PacketRec>& batch, const CostConstants& costs) {
  Cycles charged;
  for (auto& p : batch) {
    charged += copy_cost(p.size_bytes, costs);
    p.owner = BufferId::chain(instance_);
  }
  resident_ += batch.size();
  copies_ += batch.size();
  return charged;
}

void ChainPacketBuffer::release(std::size_t n) {
  if (n > resident_) throw std::logic_error("ChainPacketBuffer: releasing more than resident");
  resident_ -= n;
}

Cycles ownership_transfer_cost(TransferMode mode, const CostConstants& costs) {
  switch (mode) {
    case TransferMode::kContextSwitch:
      return costs.t_ctx;
    case TransferMode::kRemap:
      return costs.unmap + costs.map;
  }
  return {};
}

double remap_to_context_switch_ratio(const CostConstants& costs) {
  return static_cast<double>(ownership_transfer_cost(TransferMode::kRemap, costs).value) /
         static_cast<double>(ownership_transfer_cost(TransferMode::kContextSwitch, costs).value);
}

const char* violation_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::kCrossChain:
      return "cross_chain";
    case ViolationKind::kNicBufferDownstream:
      return "nic_buffer_downstream";
    case ViolationKind::kTemporal:
      return "temporal";
  }
  return "unknown";
}

bool OwnershipLedger::check(TimeNs t, Accessor who, std::uint64_t packet, BufferId buffer,
                            bool delivery) {
  ++accesses_;
  LedgerEntry e{t, who, packet, buffer, false};
  std::vector<ViolationKind> kinds;
  if (who.instance != buffer.instance) kinds.push_back(ViolationKind::kCrossChain);
  if (buffer.kind == BufferId::Kind::kNic && who.nf_index != 0) {
    kinds.push_back(ViolationKind::kNicBufferDownstream);
  }
  if (delivery) {
    progress_[packet] = -1;
  } else {
    auto it = progress_.find(packet);
    if (who.nf_index >= 1 && (it == progress_.end() || it->second != who.nf_index - 1)) {
      kinds.push_back(ViolationKind::kTemporal);
    }
    progress_[packet] = who.nf_index;
  }
  e.violation = !kinds.empty();
  for (auto k : kinds) violations_.push_back({e, k});
  if (log_enabled_) log_.push_back(e);
  return !e.violation;
}

bool OwnershipLedger::record_delivery(TimeNs t, Accessor who, std::uint64_t packet,
                                      BufferId buffer) {
  return check(t, who, packet, buffer, true);
}

bool OwnershipLedger::record_access(TimeNs t, Accessor who, std::uint64_t packet,
                                    BufferId buffer) {
  return check(t, who, packet, buffer, false);
}

std::size_t OwnershipLedger::count(ViolationKind k) const {
  return static_cast<std::size_t>(std::count_if(violations_.begin(), violations_.end(),
                                                [k](const Violation& v) { return v.kind == k; }));
}

void OwnershipLedger::write_csv(std::ostream& os) const {
  // Rounds are computed ahead of time per core, so the raw log is only
  // time-ordered per instance; merge here.
  std::vector<std::size_t> order(log_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [this](std::size_t a, std::size_t b) { return log_[a].time < log_[b].time; });
  os << "time_ns,chain_id,nf_index,packet_id,buffer_id,violation_flag\n";
  for (auto i : order) {
    const auto& e = log_[i];
    os << e.time.value << ',' << e.accessor.instance << ',' << e.accessor.nf_index << ','
       << e.packet_id << ',' << e.buffer.to_string() << ',' << (e.violation ? 1 : 0) << '\n';
  }
}

}  // namespace quaysim
