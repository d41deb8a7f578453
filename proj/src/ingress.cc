#include "quaysim/ingress.h"

#include <algorithm>
#include <stdexcept>

namespace quaysim {

std::optional<std::size_t> classify(const std::vector<ChainSpec>& chains, const FlowKey& flow) {
  for (std::size_t i = 0; i < chains.size(); ++i) {
    if (chains[i].filter.matches(flow)) return i;
  }
  return std::nullopt;
}

std::optional<int> pick_highest_load_without_overload(const std::vector<InstanceCandidate>& active,
                                                      double threshold) {
  std::optional<InstanceCandidate> best;
  for (const auto& c : active) {
    if (c.load > threshold) continue;
    if (!best || c.load > best->load || (c.load == best->load && c.instance < best->instance)) {
      best = c;
    }
  }
  if (!best) return std::nullopt;
  return best->instance;
}

std::optional<int> pick_idle_from_lowest_load_worker(const std::vector<InstanceCandidate>& idle,
                                                     const std::unordered_map<int, double>& worker_load) {
  auto load_of = [&](int w) {
    auto it = worker_load.find(w);
    return it == worker_load.end() ? 0.0 : it->second;
  };
  std::optional<InstanceCandidate> best;
  for (const auto& c : idle) {
    if (!best) {
      best = c;
      continue;
    }
    const double lc = load_of(c.worker), lb = load_of(best->worker);
    if (lc < lb || (lc == lb && (c.worker < best->worker ||
                                 (c.worker == best->worker && c.instance < best->instance)))) {
      best = c;
    }
  }
  if (!best) return std::nullopt;
  return best->instance;
}

RouteResult FlowTable::route(const PacketRec& p) {
  if (auto it = rules_.find(p.flow); it != rules_.end()) {
    return {RouteKind::kDeliver, it->second.instance};
  }
  if (auto it = pending_.find(p.flow); it != pending_.end()) {
    it->second.buffered.push_back(p);
    return {RouteKind::kBuffered, it->second.instance};
  }
  return {RouteKind::kUnknown, -1};
}

void FlowTable::begin_install(const FlowKey& flow, int worker, int instance, TimeNs done_at) {
  if (rules_.count(flow) || pending_.count(flow)) {
    throw std::logic_error("begin_install: flow already known: " + flow.to_string());
  }
  pending_[flow] = Pending{worker, instance, done_at, {}};
}

std::vector<PacketRec> FlowTable::complete_install(const FlowKey& flow, TimeNs now) {
  auto it = pending_.find(flow);
  if (it == pending_.end()) throw std::logic_error("complete_install: flow not pending");
  Pending p = std::move(it->second);
  pending_.erase(it);
  FlowRule rule{flow, p.worker, p.instance, static_cast<std::uint32_t>(0x100 + p.instance), now};
  rules_[flow] = rule;
  history_.push_back(rule);
  ++installs_;
  return std::move(p.buffered);
}

void FlowTable::remove(const FlowKey& flow) { rules_.erase(flow); }

std::size_t FlowTable::buffered_packets() const {
  std::size_t n = 0;
  for (const auto& [k, p] : pending_) n += p.buffered.size();
  return n;
}

void FlowTable::write_csv(std::ostream& os) const {
  os << "src_ip,dst_ip,src_port,dst_port,proto,worker,instance,l2_tag,installed_at_ns\n";
  for (const auto& r : history_) {
    os << ipv4_to_string(r.flow.src_ip) << ',' << ipv4_to_string(r.flow.dst_ip) << ','
       << r.flow.src_port << ',' << r.flow.dst_port << ',' << static_cast<int>(r.flow.proto) << ','
       << r.worker << ',' << r.instance << ',' << r.l2_tag << ',' << r.installed_at.value << '\n';
  }
}

Assignment handle_new_flow(const FlowKey& flow, int logical_chain, Controller& controller,
                           FlowTable& table, TimeNs now) {
  LogicalChain& lc = controller.chain(logical_chain);
  Assignment a;
  a.at = now;
  a.logical_chain = logical_chain;
  a.threshold = lc.threshold;
  for (int id : lc.active) {
    a.candidates.push_back({id, controller.instance_worker(id), controller.instance_load(id)});
  }
  std::optional<int> selected = pick_highest_load_without_overload(a.candidates, lc.threshold);
  if (!selected) {
    std::vector<InstanceCandidate> idle;
    std::unordered_map<int, double> wl;
    for (int id : lc.idle) {
      const int w = controller.instance_worker(id);
      idle.push_back({id, w, 0.0});
      wl.try_emplace(w, controller.worker_load(w));
    }
    selected = pick_idle_from_lowest_load_worker(idle, wl);
    a.from_idle = selected.has_value();
  }
  if (!selected) {
    controller.record_fault({now, FaultKind::kCapacity, logical_chain});
    controller.maintain_pool(logical_chain, now);
    return a;
  }
  a.instance = *selected;
  a.worker = controller.instance_worker(*selected);
  a.chosen_load = a.from_idle ? 0.0 : controller.instance_load(*selected);
  controller.set_active(*selected);
  a.install_done = now + controller.scaling().install_latency;
  table.begin_install(flow, a.worker, a.instance, a.install_done);
  controller.maintain_pool(logical_chain, now);
  return a;
}

}  // namespace quaysim
