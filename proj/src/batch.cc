#include "quaysim/batch.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace quaysim {

ChainCostSummary ChainCostSummary::of(std::vector<double> service_cycles) {
  ChainCostSummary c;
  c.n = static_cast<int>(service_cycles.size());
  c.sum = std::accumulate(service_cycles.begin(), service_cycles.end(), 0.0);
  c.service_cycles = std::move(service_cycles);
  return c;
}

void check_batch_params(const BatchParams& params) {
  if (params.freq_hz <= 0) throw std::invalid_argument("batch: freq must be positive");
  if (params.b_m < 1) throw std::invalid_argument("batch: b_m must be >= 1");
  if (!(params.b_v >= 1.0 && params.b_v <= params.b_m)) {
    throw std::invalid_argument("batch: b_v must lie in [1, b_m]");
  }
  if (!(params.p > 0.0 && params.p < 1.0)) throw std::invalid_argument("batch: p must lie in (0, 1)");
  if (params.t_ctx_cycles < 0.0) throw std::invalid_argument("batch: negative T_ctx");
}

double estimated_rate(const ChainCostSummary& c, const BatchParams& params, int batch_multiplier) {
  if (batch_multiplier < 1) throw std::invalid_argument("estimated_rate: B_v must be >= 1");
  const double freq = static_cast<double>(params.freq_hz);
  const double overhead =
      c.n * params.t_ctx_seconds() * freq / (static_cast<double>(batch_multiplier) * params.b_v);
  return freq / (c.sum + overhead);
}

double ideal_rate(const ChainCostSummary& c, std::int64_t freq_hz) {
  if (!(c.sum > 0.0)) throw std::invalid_argument("ideal_rate: sum of service cycles must be > 0");
  return static_cast<double>(freq_hz) / c.sum;
}

int min_batch(const ChainCostSummary& c, const BatchParams& params) {
  check_batch_params(params);
  if (!(c.sum > 0.0)) throw std::invalid_argument("min_batch: sum of service cycles must be > 0");
  const double bound =
      params.p * c.n * params.t_ctx_cycles / ((1.0 - params.p) * params.b_v * c.sum);
  return std::max(1, static_cast<int>(std::ceil(bound)));
}

int min_batch_scan(const ChainCostSummary& c, const BatchParams& params, int limit) {
  check_batch_params(params);
  const double target = params.p * ideal_rate(c, params.freq_hz);
  for (int b = 1; b <= limit; ++b) {
    if (estimated_rate(c, params, b) >= target) return b;
  }
  throw std::runtime_error("min_batch_scan: no feasible B_v within limit");
}

}  // namespace quaysim
