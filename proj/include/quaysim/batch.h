#ifndef QUAYSIM_BATCH_H_
#define QUAYSIM_BATCH_H_

#include <cstdint>
#include <vector>

namespace quaysim {

// Per-packet cycle costs of the NFs of one chain.
struct ChainCostSummary {
  int n = 0;
  std::vector<double> service_cycles;
  double sum = 0.0;

  static ChainCostSummary of(std::vector<double> service_cycles);
};

struct BatchParams {
  std::int64_t freq_hz = 2'400'000'000;
  // Context-switch cost kept in cycles; the rate formula's T_ctx * Freq.
  double t_ctx_cycles = 2143.0;
  double b_v = 32.0;  // average packets per DMA batch, in [1, b_m]
  int b_m = 32;
  double p = 0.95;    // target fraction of the ideal rate, in (0, 1)

  double t_ctx_seconds() const { return t_ctx_cycles / static_cast<double>(freq_hz); }
};

// Throws std::invalid_argument unless 1 <= b_v <= b_m and 0 < p < 1.
void check_batch_params(const BatchParams& params);

// Packet rate of a chain when the first NF processes batch_multiplier batches
// per round: Freq / (sum_T + N * T_ctx * Freq / (B_v * b_v)).
double estimated_rate(const ChainCostSummary& c, const BatchParams& params, int batch_multiplier);

// Freq / sum_T: the rate with no context switches at all.
double ideal_rate(const ChainCostSummary& c, std::int64_t freq_hz);

// Smallest B_v >= 1 with estimated_rate >= p * ideal_rate, in closed form:
// max(1, ceil(p * N * T_ctx * Freq / ((1 - p) * b_v * sum_T))).
int min_batch(const ChainCostSummary& c, const BatchParams& params);

// Same quantity by scanning B_v = 1, 2, ... against the rate constraint.
int min_batch_scan(const ChainCostSummary& c, const BatchParams& params, int limit = 1 << 20);

}  // namespace quaysim

#endif  // QUAYSIM_BATCH_H_
