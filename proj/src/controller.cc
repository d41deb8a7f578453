#include "quaysim/controller.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace quaysim {

double chain_load(double packet_rate, double max_rate) {
  if (!(max_rate > 0.0)) throw std::invalid_argument("chain_load: max_rate must be positive");
  return std::clamp(packet_rate / max_rate, 0.0, 1.5);
}

void ProfileCurve::check() const {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].threshold_pct > rows[i - 1].threshold_pct)) {
      throw std::invalid_argument("profile curve: thresholds must strictly increase");
    }
  }
}

double ProfileCurve::max_rate() const {
  if (rows.empty()) throw std::invalid_argument("profile curve: empty");
  const auto& top = rows.back();
  return top.rate_pps / (top.threshold_pct / 100.0);
}

void ProfileCurve::write_csv(std::ostream& os) const {
  os << "threshold_pct,p99_ns,max_qlen,rate_pps\n";
  for (const auto& r : rows) {
    os << r.threshold_pct << ',' << r.p99.value << ',' << r.max_qlen << ',' << r.rate_pps << '\n';
  }
}

ProfileCurve ProfileCurve::read_csv(std::istream& is) {
  ProfileCurve c;
  std::string line;
  if (!std::getline(is, line) || line.rfind("threshold_pct,p99_ns,max_qlen,rate_pps", 0) != 0) {
    throw std::invalid_argument("profile csv: missing header");
  }
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ProfileRow r;
    char c1, c2, c3;
    if (!(ls >> r.threshold_pct >> c1 >> r.p99.value >> c2 >> r.max_qlen >> c3 >> r.rate_pps) ||
        c1 != ',' || c2 != ',' || c3 != ',') {
      throw std::invalid_argument("profile csv: malformed row at line " + std::to_string(lineno));
    }
    c.rows.push_back(r);
  }
  c.check();
  return c;
}

ThresholdChoice pick_load_threshold(const ProfileCurve& curve, TimeNs slo_p99) {
  if (curve.rows.empty()) throw std::invalid_argument("pick_load_threshold: empty curve");
  std::optional<double> best;
  for (const auto& r : curve.rows) {
    if (r.p99 <= slo_p99 && (!best || r.threshold_pct > *best)) best = r.threshold_pct;
  }
  if (best) return {*best, true};
  double lowest = curve.rows.front().threshold_pct;
  for (const auto& r : curve.rows) lowest = std::min(lowest, r.threshold_pct);
  return {lowest, false};
}

const char* fault_name(FaultKind k) {
  switch (k) {
    case FaultKind::kCapacity:
      return "capacity";
    case FaultKind::kNoIdleCore:
      return "no_idle_core";
    case FaultKind::kScaleOutFailed:
      return "scale_out_failed";
    case FaultKind::kYieldTimeout:
      return "yield_timeout";
    case FaultKind::kInfeasibleSlo:
      return "infeasible_slo";
  }
  return "unknown";
}

Controller::Controller(const ScalingConfig& scaling, const MonitorConfig& monitor,
                       InstanceDeployer& deployer)
    : scaling_(scaling), monitor_(monitor), deployer_(deployer) {}

int Controller::add_logical_chain(const ChainSpec& spec, double threshold, double max_rate) {
  if (!(max_rate > 0.0)) throw std::invalid_argument("add_logical_chain: max_rate must be positive");
  LogicalChain lc;
  lc.index = static_cast<int>(chains_.size());
  lc.spec = spec;
  lc.threshold = threshold;
  lc.max_rate = max_rate;
  chains_.push_back(std::move(lc));
  return chains_.back().index;
}

Controller::InstanceView& Controller::view(int instance) {
  auto it = instances_.find(instance);
  if (it == instances_.end()) throw std::out_of_range("controller: unknown instance");
  return it->second;
}

const Controller::InstanceView& Controller::view(int instance) const {
  auto it = instances_.find(instance);
  if (it == instances_.end()) throw std::out_of_range("controller: unknown instance");
  return it->second;
}

StatsVerdict Controller::on_stats_update(const ChainStats& stats) {
  auto& v = view(stats.instance);
  const double prev_rate = v.last ? v.last->packet_rate : 0.0;
  const int prev_q = v.last ? v.last->queue_len : 0;
  const double rel = std::abs(stats.packet_rate - prev_rate) / std::max(prev_rate, 1.0);
  const int mark = monitor_.queue_mark;
  const bool crossed = (prev_q >= mark) != (stats.queue_len >= mark);
  if (rel >= monitor_.epsilon || crossed) {
    v.last = stats;
    ++accepted_;
    return StatsVerdict::kAccepted;
  }
  ++suppressed_;
  return StatsVerdict::kSuppressed;
}

double Controller::instance_rate(int instance) const {
  const auto& v = view(instance);
  return v.last ? v.last->packet_rate : 0.0;
}

double Controller::instance_load(int instance) const {
  const auto& v = view(instance);
  return chain_load(instance_rate(instance), chain(v.logical_chain).max_rate);
}

int Controller::instance_worker(int instance) const { return view(instance).worker; }
int Controller::instance_chain(int instance) const { return view(instance).logical_chain; }

double Controller::worker_load(int worker) const {
  double sum = 0.0;
  for (const auto& [id, v] : instances_) {
    if (v.deployed && v.active && v.worker == worker) sum += instance_load(id);
  }
  return sum / std::max(1, deployer_.worker_cores(worker));
}

bool Controller::scale_out(int logical_chain, TimeNs now) {
  auto placed = deployer_.deploy(logical_chain);
  if (!placed) {
    faults_.push_back({now, FaultKind::kScaleOutFailed, logical_chain});
    return false;
  }
  InstanceView v;
  v.logical_chain = logical_chain;
  v.worker = placed->worker;
  v.deployed = true;
  instances_[placed->instance] = v;
  chain(logical_chain).idle.push_back(placed->instance);
  return true;
}

bool Controller::scale_in(int logical_chain, TimeNs) {
  auto& idle = chain(logical_chain).idle;
  if (idle.empty()) return false;
  // Newest pre-deployment goes first.
  auto it = std::max_element(idle.begin(), idle.end());
  const int victim = *it;
  idle.erase(it);
  deployer_.undeploy(victim);
  view(victim).deployed = false;
  return true;
}

void Controller::maintain_pool(int logical_chain, TimeNs now) {
  auto& lc = chain(logical_chain);
  while (static_cast<int>(lc.idle.size()) < scaling_.scale_out_thresh) {
    if (!scale_out(logical_chain, now)) break;
  }
  while (static_cast<int>(lc.idle.size()) > scaling_.scale_in_thresh) {
    if (!scale_in(logical_chain, now)) break;
  }
  pool_trace_.push_back({now, logical_chain, static_cast<int>(lc.idle.size())});
}

void Controller::set_active(int instance) {
  auto& v = view(instance);
  auto& lc = chain(v.logical_chain);
  std::erase(lc.idle, instance);
  if (std::find(lc.active.begin(), lc.active.end(), instance) == lc.active.end()) {
    lc.active.push_back(instance);
  }
  v.active = true;
}

void Controller::return_to_pool(int instance, TimeNs now) {
  auto& v = view(instance);
  auto& lc = chain(v.logical_chain);
  std::erase(lc.active, instance);
  v.active = false;
  v.last.reset();
  lc.idle.push_back(instance);
  maintain_pool(v.logical_chain, now);
}

void Controller::retire(int instance) {
  auto& v = view(instance);
  auto& lc = chain(v.logical_chain);
  std::erase(lc.active, instance);
  std::erase(lc.idle, instance);
  v.active = false;
}

LoopStepResult scheduler_loop_step(Worker& worker, std::vector<SGroup>& sgroups) {
  LoopStepResult out;
  for (int id : worker.instances) {
    SGroup& sg = sgroups.at(static_cast<std::size_t>(id));
    if (sg.state == SGroupState::kAttached && !sg.active) {
      auto& core = worker.cores.at(static_cast<std::size_t>(*sg.core));
      if (core.detach_sgroup(sg)) {
        out.detached.push_back(id);
      } else {
        out.draining.push_back(id);
      }
    }
    if (sg.active && !sg.scheduled() && !sg.faulted) {
      if (auto core = worker.pick_idle_core()) {
        attach_sgroup_to_core(worker, sg, *core);
        out.attached.emplace_back(id, *core);
      } else {
        out.deferred.push_back(id);
      }
    }
  }
  return out;
}

}  // namespace quaysim
