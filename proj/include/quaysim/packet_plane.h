#ifndef QUAYSIM_PACKET_PLANE_H_
#define QUAYSIM_PACKET_PLANE_H_

#include <cstdint>
#include <deque>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "quaysim/core_types.h"

namespace quaysim {

class OwnershipLedger;

// Per-instance NIC virtual-function RX queue.
class NicVfQueue {
 public:
  NicVfQueue(int instance, int capacity);

  // Appends p (owner becomes this queue's NIC buffer) or counts a drop.
  bool enqueue(PacketRec p);

  // Removes up to b_m packets for the instance's first NF and records the
  // delivery in the ledger.
  std::vector<PacketRec> dma_batch(int b_m, OwnershipLedger& ledger, TimeNs now);

  int instance() const { return instance_; }
  int capacity() const { return capacity_; }
  std::size_t size() const { return queue_.size(); }
  bool empty() const { return queue_.empty(); }
  std::uint64_t accepted() const { return accepted_; }
  std::uint64_t drops() const { return drops_; }
  // Discards every queued packet, returning them (used when an instance dies).
  std::vector<PacketRec> drain_all();

 private:
  int instance_;
  int capacity_;
  std::deque<PacketRec> queue_;
  std::uint64_t accepted_ = 0;
  std::uint64_t drops_ = 0;
};

// Copy cost of one packet: flat below the small anchor, linear between the
// small and large anchors. Throws std::out_of_range outside [64, 1500].
Cycles copy_cost(int size_bytes, const CostConstants& costs);

// Shared packet memory of a chain instance, written only by its first NF.
class ChainPacketBuffer {
 public:
  explicit ChainPacketBuffer(int instance) : instance_(instance) {}

  // Moves the batch into this buffer. Only valid for chains with >= 2 NFs.
  Cycles copy_in(std::vector<PacketRec>& batch, const CostConstants& costs);
  void release(std::size_t n);

  int instance() const { return instance_; }
  std::size_t resident() const { return resident_; }
  std::uint64_t copies() const { return copies_; }

 private:
  int instance_;
  std::size_t resident_ = 0;
  std::uint64_t copies_ = 0;
};

enum class TransferMode { kContextSwitch, kRemap };

Cycles ownership_transfer_cost(TransferMode mode, const CostConstants& costs);
// remap cost / context-switch cost.
double remap_to_context_switch_ratio(const CostConstants& costs);

struct Accessor {
  int instance = -1;
  int nf_index = 0;
};

enum class ViolationKind { kCrossChain, kNicBufferDownstream, kTemporal };

const char* violation_name(ViolationKind k);

struct LedgerEntry {
  TimeNs time;
  Accessor accessor;
  std::uint64_t packet_id = 0;
  BufferId buffer;
  bool violation = false;
};

struct Violation {
  LedgerEntry entry;
  ViolationKind kind;
};

// Records every packet access and flags the ones that break spatial or
// temporal isolation. Violations are data, never exceptions.
//
// Per packet the ledger keeps the index of the last NF that completed it in
// the current batch epoch; a delivery (DMA) opens a new epoch at -1.
class OwnershipLedger {
 public:
  // Keep the full access log (needed for CSV export). Violations and counters
  // are always kept.
  void set_log_enabled(bool on) { log_enabled_ = on; }
  bool log_enabled() const { return log_enabled_; }

  bool record_delivery(TimeNs t, Accessor who, std::uint64_t packet, BufferId buffer);
  bool record_access(TimeNs t, Accessor who, std::uint64_t packet, BufferId buffer);
  // Packet left the chain (transmitted or dropped).
  void retire(std::uint64_t packet) { progress_.erase(packet); }

  const std::vector<LedgerEntry>& log() const { return log_; }
  const std::vector<Violation>& violations() const { return violations_; }
  std::uint64_t accesses() const { return accesses_; }
  std::size_t tracked_packets() const { return progress_.size(); }
  std::size_t count(ViolationKind k) const;

  // time_ns,chain_id,nf_index,packet_id,buffer_id,violation_flag; rows sorted by time.
  void write_csv(std::ostream& os) const;

 private:
  bool check(TimeNs t, Accessor who, std::uint64_t packet, BufferId buffer, bool delivery);

  bool log_enabled_ = false;
  std::vector<LedgerEntry> log_;
  std::vector<Violation> violations_;
  std::unordered_map<std::uint64_t, int> progress_;
  std::uint64_t accesses_ = 0;
};

}  // namespace quaysim

#endif  // QUAYSIM_PACKET_PLANE_H_
