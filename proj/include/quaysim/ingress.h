#ifndef QUAYSIM_INGRESS_H_
#define QUAYSIM_INGRESS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "quaysim/controller.h"
#include "quaysim/core_types.h"

namespace quaysim {

// First chain in list order whose traffic filter matches; nullopt means the
// flow bypasses NFV.
std::optional<std::size_t> classify(const std::vector<ChainSpec>& chains, const FlowKey& flow);

struct InstanceCandidate {
  int instance = -1;
  int worker = -1;
  double load = 0.0;
};

// Highest-load candidate with load <= threshold; ties go to the lowest id.
std::optional<int> pick_highest_load_without_overload(const std::vector<InstanceCandidate>& active,
                                                      double threshold);

// Idle instance on the worker with the lowest load (ties: lowest worker id,
// then lowest instance id). `worker_load` is indexed by worker id.
std::optional<int> pick_idle_from_lowest_load_worker(const std::vector<InstanceCandidate>& idle,
                                                     const std::unordered_map<int, double>& worker_load);

struct FlowRule {
  FlowKey flow;
  int worker = -1;
  int instance = -1;
  std::uint32_t l2_tag = 0;
  TimeNs installed_at;
};

enum class RouteKind { kDeliver, kBuffered, kUnknown };

struct RouteResult {
  RouteKind kind = RouteKind::kUnknown;
  int instance = -1;
};

// ToR flow table plus the ingress's per-flow buffers for rules still being
// installed. A flow is never both installed and pending.
class FlowTable {
 public:
  // Installed -> deliver to the rule's instance; pending -> p is appended to
  // the flow's buffer; unknown -> caller runs the new-flow path.
  RouteResult route(const PacketRec& p);

  void begin_install(const FlowKey& flow, int worker, int instance, TimeNs done_at);
  // Activates the rule and returns the buffered packets in arrival order.
  std::vector<PacketRec> complete_install(const FlowKey& flow, TimeNs now);
  void remove(const FlowKey& flow);

  bool installed(const FlowKey& flow) const { return rules_.count(flow) != 0; }
  bool pending(const FlowKey& flow) const { return pending_.count(flow) != 0; }
  std::size_t buffered_packets() const;
  const std::unordered_map<FlowKey, FlowRule, FlowKeyHash>& rules() const { return rules_; }
  std::uint64_t installs() const { return installs_; }

  // flow 5-tuple, worker, instance, l2_tag, installed_at_ns; sorted by install time.
  void write_csv(std::ostream& os) const;
  // Every rule ever installed, including removed ones.
  const std::vector<FlowRule>& history() const { return history_; }

 private:
  struct Pending {
    int worker = -1;
    int instance = -1;
    TimeNs done_at;
    std::vector<PacketRec> buffered;
  };
  std::unordered_map<FlowKey, FlowRule, FlowKeyHash> rules_;
  std::unordered_map<FlowKey, Pending, FlowKeyHash> pending_;
  std::vector<FlowRule> history_;
  std::uint64_t installs_ = 0;
};

struct Assignment {
  TimeNs at;
  int logical_chain = -1;
  int instance = -1;  // -1 when rejected
  int worker = -1;
  bool from_idle = false;
  double chosen_load = 0.0;
  double threshold = 0.0;
  // Loads of every active candidate at decision time, for audit.
  std::vector<InstanceCandidate> candidates;
  TimeNs install_done;
};

// New-flow path: pick an instance for the flow, start rule installation and
// run the pool loops. A flow with no active or idle capacity is rejected.
Assignment handle_new_flow(const FlowKey& flow, int logical_chain, Controller& controller,
                           FlowTable& table, TimeNs now);

}  // namespace quaysim

#endif  // QUAYSIM_INGRESS_H_
