#include "cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "quaysim/batch.h"
#include "quaysim/coop_sched.h"
#include "quaysim/engine.h"
#include "quaysim/metrics.h"
#include "quaysim/profiler.h"
#include "quaysim/scenario_io.h"

namespace quaysim::cli {
namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  std::optional<std::uint64_t> seed;
  std::string out_dir = "quaysim_out";
  int threads = 1;
};

std::uint64_t pick_seed(const CommonOpts& o, const Scenario& s) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("QUAYSIM_SEED")) {
    std::size_t used = 0;
    const std::string v = env;
    unsigned long long x = 0;
    try {
      x = std::stoull(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw std::invalid_argument("QUAYSIM_SEED is not an integer: " + v);
    return x;
  }
  return s.seed;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

std::size_t chain_index(const Scenario& s, int chain_id) {
  for (std::size_t i = 0; i < s.cluster.chains.size(); ++i) {
    if (s.cluster.chains[i].id == chain_id) return i;
  }
  throw std::invalid_argument("unknown chain id " + std::to_string(chain_id));
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw std::invalid_argument(what + ": not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(what + ": empty list");
  return out;
}

void write_run_outputs(const fs::path& dir, const Scenario& s, const RunResult& r) {
  fs::create_directories(dir);
  write_file(dir / "metrics.json", render([&](std::ostream& os) { write_metrics_json(os, r.report); }));
  write_file(dir / "metrics.csv", render([&](std::ostream& os) { write_metrics_csv(os, r.report); }));
  write_file(dir / "summary.txt", render([&](std::ostream& os) { write_summary_table(os, r.report); }));
  write_file(dir / "scenario.json", dump_scenario(s));
  write_file(dir / "rounds.csv", render([&](std::ostream& os) { write_trace_csv(os, r.rounds); }));
  write_file(dir / "flow_table.csv", render([&](std::ostream& os) { r.flow_table.write_csv(os); }));
  write_file(dir / "cores.csv", render([&](std::ostream& os) {
               os << "time_ns,worker,core,instance,chain,event,attached_total\n";
               for (const auto& e : r.core_trace) {
                 os << e.at.value << ',' << e.worker << ',' << e.core << ',' << e.instance << ','
                    << e.chain << ',' << (e.attach ? "attach" : "detach") << ',' << e.attached_total << '\n';
               }
             }));
  write_file(dir / "pool.csv", render([&](std::ostream& os) {
               os << "time_ns,chain,idle\n";
               for (const auto& p : r.pool_trace) os << p.at.value << ',' << p.logical_chain << ',' << p.idle << '\n';
             }));
  write_file(dir / "faults.csv", render([&](std::ostream& os) {
               os << "time_ns,kind,subject\n";
               for (const auto& f : r.faults) os << f.at.value << ',' << fault_name(f.kind) << ',' << f.subject << '\n';
             }));
  if (r.ledger.log_enabled()) {
    write_file(dir / "ledger.csv", render([&](std::ostream& os) { r.ledger.write_csv(os); }));
  }
  for (std::size_t i = 0; i < r.resolved.size(); ++i) {
    if (!r.resolved[i].curve) continue;
    write_file(dir / ("profile_chain" + std::to_string(s.cluster.chains[i].id) + ".csv"),
               render([&](std::ostream& os) { r.resolved[i].curve->write_csv(os); }));
  }
}

int cmd_run(const std::string& path, const CommonOpts& o, std::ostream& out) {
  Scenario s = load_scenario(path);
  s.seed = pick_seed(o, s);
  const RunResult r = run_scenario(s, o.threads);
  write_run_outputs(o.out_dir, s, r);
  write_summary_table(out, r.report);
  out << "outputs written to " << o.out_dir << '\n';
  return kOk;
}

int cmd_profile(const std::string& path, int chain_id, const std::string& thresholds, const CommonOpts& o,
                std::ostream& out) {
  Scenario s = load_scenario(path);
  s.seed = pick_seed(o, s);
  const std::size_t idx = chain_index(s, chain_id);
  if (!thresholds.empty()) s.cluster.profile.thresholds_pct = parse_list(thresholds, "--thresholds");
  const ChainSpec& c = s.cluster.chains[idx];
  const int bm = resolve_batch_multiplier(s.cluster, c, s.traffic);
  const std::uint64_t seed = derive_seed(s.seed, 1000 + idx);
  const double max_rate = c.max_rate_pps ? *c.max_rate_pps
                                         : measure_capacity(s.cluster, c, bm, median_packet_size(s.traffic), seed);
  const ProfileCurve curve = profile_chain(s.cluster, c, s.traffic, bm, max_rate, seed, o.threads);
  fs::create_directories(o.out_dir);
  const std::string csv = render([&](std::ostream& os) { curve.write_csv(os); });
  write_file(fs::path(o.out_dir) / ("profile_chain" + std::to_string(chain_id) + ".csv"), csv);
  out << csv;
  const auto choice = pick_load_threshold(curve, c.slo_p99);
  out << "selected threshold for slo_p99 " << format_us(c.slo_p99) << " us: "
      << format_number(choice.threshold_pct) << "%" << (choice.feasible ? "" : " (no row meets the SLO)") << '\n';
  return kOk;
}

int cmd_batch_calc(int n, const std::string& cycles, double freq, double t_ctx, double b, int b_m, double p,
                   std::ostream& out, std::ostream& err) {
  std::vector<double> t = parse_list(cycles, "--cycles");
  if (n < 1) throw std::invalid_argument("--n must be >= 1");
  if (t.size() == 1 && n > 1) t.assign(static_cast<std::size_t>(n), t.front());
  if (static_cast<int>(t.size()) != n) {
    throw std::invalid_argument("--cycles needs 1 or N values, got " + std::to_string(t.size()));
  }
  for (double x : t) {
    if (!(x > 0.0)) throw std::invalid_argument("--cycles values must be positive");
  }
  if (!(freq > 0.0)) throw std::invalid_argument("--freq must be positive");
  if (t_ctx < 0.0) throw std::invalid_argument("--t-ctx must be >= 0");
  BatchParams params;
  params.freq_hz = std::llround(freq);
  params.t_ctx_cycles = t_ctx;
  params.b_v = b;
  params.b_m = b_m;
  params.p = p;
  check_batch_params(params);
  const auto c = ChainCostSummary::of(t);
  const int closed = min_batch(c, params);
  const int scan = min_batch_scan(c, params);
  const double rate = estimated_rate(c, params, closed);
  const double ideal = ideal_rate(c, params.freq_hz);
  out << "B_v_closed_form " << closed << '\n';
  out << "B_v_scan " << scan << '\n';
  out << "estimated_rate_pps " << format_number(rate) << '\n';
  out << "ideal_rate_pps " << format_number(ideal) << '\n';
  out << "ratio " << format_number(rate / ideal) << '\n';
  if (closed != scan) {
    err << "self-check failed: closed form " << closed << " != scan " << scan << '\n';
    return kInternal;
  }
  return kOk;
}

int cmd_sweep(const std::string& path, const std::string& param, const std::string& values_text, int chain_id,
              const CommonOpts& o, std::ostream& out) {
  static const std::vector<std::string> kParams = {"load_threshold", "slo", "flow_rate", "chain_length"};
  if (std::find(kParams.begin(), kParams.end(), param) == kParams.end()) {
    throw std::invalid_argument("unknown sweep parameter '" + param +
                                "' (expected load_threshold, slo, flow_rate or chain_length)");
  }
  Scenario base = load_scenario(path);
  base.seed = pick_seed(o, base);
  const std::vector<double> values = parse_list(values_text, "--values");
  const std::size_t idx = chain_index(base, chain_id);
  const ChainSpec& chain = base.cluster.chains[idx];
  std::vector<std::string> rows(values.size());
  std::string header;

  if (param == "load_threshold") {
    const int bm = resolve_batch_multiplier(base.cluster, chain, base.traffic);
    const double max_rate =
        chain.max_rate_pps ? *chain.max_rate_pps
                           : measure_capacity(base.cluster, chain, bm, median_packet_size(base.traffic),
                                              derive_seed(base.seed, 1000 + idx));
    parallel_for(values.size(), o.threads, [&](std::size_t i) {
      const auto row = profile_point(base.cluster, chain, base.traffic, bm, max_rate, values[i],
                                     base.cluster.profile.warmup, base.cluster.profile.hold,
                                     derive_seed(base.seed, i));
      rows[i] = format_number(row.threshold_pct) + "," + std::to_string(row.p99.value) + "," +
                std::to_string(row.max_qlen) + "," + format_number(row.rate_pps) + "\n";
    });
    header = "threshold_pct,p99_ns,max_qlen,rate_pps\n";
  } else if (param == "chain_length") {
    parallel_for(values.size(), o.threads, [&](std::size_t i) {
      const int len = static_cast<int>(values[i]);
      if (len < 1 || static_cast<double>(len) != values[i]) {
        throw std::invalid_argument("chain_length values must be positive integers");
      }
      ChainSpec c = chain;
      c.nfs.clear();
      for (int k = 0; k < len; ++k) c.nfs.push_back(chain.nfs[static_cast<std::size_t>(k) % chain.nfs.size()]);
      c.batch_multiplier.reset();
      const int bm = resolve_batch_multiplier(base.cluster, c, base.traffic);
      const std::uint64_t seed = derive_seed(base.seed, i);
      const double rate = measure_capacity(base.cluster, c, bm, median_packet_size(base.traffic), seed);
      rows[i] = std::to_string(len) + "," + std::to_string(seed) + "," + std::to_string(bm) + "," +
                format_number(rate) + "\n";
    });
    header = "chain_length,seed,batch_multiplier,rate_pps\n";
  } else {
    parallel_for(values.size(), o.threads, [&](std::size_t i) {
      Scenario s = base;
      s.seed = derive_seed(base.seed, i);
      if (param == "slo") {
        for (auto& c : s.cluster.chains) {
          c.slo_p99 = TimeNs{std::llround(values[i] * 1e3)};
          c.load_threshold.reset();
        }
      } else {
        s.traffic.flow_rate = values[i];
      }
      const RunResult r = run_scenario(s, 1);
      const auto& m = r.report;
      const auto& cm = m.chains[idx];
      rows[i] = format_number(values[i]) + "," + std::to_string(s.seed) + "," + format_number(cm.threshold) + "," +
                std::to_string(m.latency.p50.value) + "," + std::to_string(m.latency.p99.value) + "," +
                format_number(m.loss_rate()) + "," + format_number(m.avg_cores) + "," +
                std::to_string(m.max_cores) + "," + std::to_string(m.processed) + "\n";
    });
    header = param + ",seed,threshold,p50_ns,p99_ns,loss_rate,avg_cores,max_cores,processed\n";
  }
  std::string csv = header;
  for (const auto& r : rows) csv += r;
  out << csv;
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / ("sweep_" + param + ".csv"), csv);
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"quaysim: NF chain scheduling and autoscaling simulator"};
  app.require_subcommand(1);
  CommonOpts common;
  std::uint64_t seed_value = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_value, "Base RNG seed (falls back to QUAYSIM_SEED, then the scenario)");
    sub->add_option("--out", common.out_dir, "Output directory");
    sub->add_option("--threads", common.threads, "Scenario-level worker threads")->check(CLI::Range(1, 256));
  };

  std::string scenario_path;
  auto* run = app.add_subcommand("run", "Run a scenario and write metrics and traces");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  add_common(run);

  int chain_id = 0;
  std::string thresholds;
  auto* profile = app.add_subcommand("profile", "Profile a chain's tail latency against load threshold");
  profile->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  profile->add_option("--chain", chain_id, "Chain id")->required();
  profile->add_option("--thresholds", thresholds, "Comma-separated thresholds in percent");
  add_common(profile);

  int n = 1;
  std::string cycles;
  double freq = 2.4e9, t_ctx = 2143.0, b = 32.0, p = 0.95;
  int b_m = 32;
  auto* batch = app.add_subcommand("batch-calc", "Smallest batch multiplier meeting the rate target");
  batch->add_option("--n", n, "Chain length")->required();
  batch->add_option("--cycles", cycles, "Per-NF cycles per packet: one value or N comma-separated")->required();
  batch->add_option("--freq", freq, "CPU frequency in Hz");
  batch->add_option("--t-ctx", t_ctx, "Context-switch cost in cycles");
  batch->add_option("--b", b, "Average packets per DMA batch");
  batch->add_option("--b-m", b_m, "Hardware maximum batch");
  batch->add_option("--p", p, "Target fraction of the ideal rate");

  std::string param, values;
  auto* sweep = app.add_subcommand("sweep", "Run one scenario per parameter value and emit CSV");
  sweep->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  sweep->add_option("--param", param, "load_threshold | slo | flow_rate | chain_length")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--chain", chain_id, "Chain id");
  add_common(sweep);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  for (auto* sub : {run, profile, sweep}) {
    if (sub->parsed() && sub->count("--seed")) common.seed = seed_value;
  }

  try {
    if (run->parsed()) return cmd_run(scenario_path, common, out);
    if (profile->parsed()) return cmd_profile(scenario_path, chain_id, thresholds, common, out);
    if (batch->parsed()) return cmd_batch_calc(n, cycles, freq, t_ctx, b, b_m, p, out, err);
    if (sweep->parsed()) return cmd_sweep(scenario_path, param, values, chain_id, common, out);
  } catch (const ConservationError& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

}  // namespace quaysim::cli
