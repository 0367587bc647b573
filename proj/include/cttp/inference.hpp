// Conditional-marginal estimation by pinned local sampling with median
// boosting: r independent batches of s samples each, a per-batch work
// truncation, and a coordinate-wise median of the batch frequency vectors.

#pragma once

#include <cstdint>
#include <optional>

#include "cttp/coloring_engine.hpp"
#include "cttp/instance.hpp"
#include "cttp/soft_engine.hpp"

namespace cttp {

struct MarginalEstimate {
  int32_t target = 0;
  std::vector<double> estimates;  // length q, nonnegative, sums to 1
  double eps = 0.0;
  double delta = 0.0;
  uint64_t samples_used = 0;  // completed samples across all batches
  uint64_t truncations = 0;   // batches stopped by the work budget
  int64_t batches = 0;        // r
  int64_t batch_size = 0;     // s
};

struct InferenceOptions {
  uint64_t seed = 0;
  int jobs = 1;
  std::optional<int64_t> batches_override;     // must be odd
  std::optional<int64_t> batch_size_override;
  ColoringPolicy policy = ColoringPolicy::strict;
  uint64_t budget = 1'000'000'000;
};

// Batch count: smallest odd integer >= 18 ln(2q/delta).
int64_t inference_batches(int32_t q, double delta);
// Batch size: ceil(6 q ln(20 q) / eps^2), from a multiplicative Chernoff
// bound against the 1/(2q) marginal floor plus a union bound over q values.
int64_t inference_batch_size(int32_t q, double eps);

// Estimates mu_v^sigma for the pinning sigma given by `pins` (-1 entries
// free). Every positive-probability value is within (1 +- eps) of the truth
// with probability at least 1 - delta. Colors pinned at neighbors of the
// target (zero-probability values) are reported as exactly 0.
MarginalEstimate estimate_conditional_marginal(const Instance& inst, const PinTable& pins,
                                               int32_t target, double eps, double delta,
                                               const InferenceOptions& opts = {});

}  // namespace cttp
