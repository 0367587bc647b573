// Ground-truth machinery: exact Gibbs enumeration, forward systematic-scan
// Glauber simulation, and the statistical comparison utilities used by the
// verification harness.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "cttp/instance.hpp"
#include "cttp/rng.hpp"
#include "cttp/schedule.hpp"

namespace cttp {

// Exact distribution over configurations of a vertex subset. Only
// positive-probability configurations appear in the support.
struct ExactDistribution {
  std::vector<int32_t> vertices;  // the free vertices, in table order
  int32_t q = 2;
  std::vector<std::vector<int32_t>> support;
  std::vector<double> probs;
  double log_z = 0.0;  // log of the total unnormalized weight

  // Mixed-radix code of a configuration aligned with `vertices`.
  uint64_t code(std::span<const int32_t> config) const {
    uint64_t c = 0;
    for (size_t i = config.size(); i-- > 0;) c = c * static_cast<uint64_t>(q) + config[i];
    return c;
  }
  std::optional<size_t> index_of(std::span<const int32_t> config) const {
    auto it = index_.find(code(config));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  void rebuild_index();

 private:
  absl::flat_hash_map<uint64_t, size_t> index_;
};

// Empirical histogram keyed by ExactDistribution::code.
struct Histogram {
  absl::flat_hash_map<uint64_t, uint64_t> counts;
  uint64_t total = 0;
  void add(uint64_t code) {
    ++counts[code];
    ++total;
  }
};

// Brute-force Gibbs table conditioned on a pinning (entries of `pins` equal
// to -1 are free; pass nullptr for no pinning). Requires q^(free) <= 1e7.
// Throws ModelError when the cap is exceeded or the pinning has zero weight.
ExactDistribution enumerate_gibbs(const Instance& inst, const PinTable* pins = nullptr,
                                  int64_t cap = 10'000'000);

// Marginal table on a subset of the table's vertices.
ExactDistribution exact_marginal(const ExactDistribution& dist, std::span<const int32_t> sub);

// Any positive-weight configuration (greedy proper coloring for colorings).
std::vector<int32_t> initial_config(const Instance& inst);

// Runs the systematic scan forward for t_total updates, resampling each
// vertex from its conditional marginal with the full neighborhood known.
// Updates cover times t in (-t_total, 0], so the scan phase at the end
// matches the backward engines.
std::vector<int32_t> forward_glauber(const Instance& inst, int64_t t_total, RandomStream& rng,
                                     std::vector<int32_t> initial);

// Total variation between an exact table and an empirical histogram;
// outcomes outside the support count fully against the distance.
double tv_distance(const ExactDistribution& dist, const Histogram& hist);

struct ChiSquareResult {
  double statistic = 0.0;
  int64_t df = 0;
  double p_value = 1.0;
  int64_t cells_after_pooling = 0;
};

// Pearson goodness-of-fit with (cells - 1) degrees of freedom; cells with
// expected count below 5 are pooled into one bucket first.
ChiSquareResult chi_square_test(std::span<const double> expected,
                                std::span<const uint64_t> observed);

struct GofResult {
  double tv = 0.0;
  ChiSquareResult chi;
  uint64_t outside_support = 0;  // observations with zero exact probability
};

GofResult goodness_of_fit(const ExactDistribution& dist, const Histogram& hist);

// Regularized upper incomplete gamma Q(a, x); the chi-square p-value is
// Q(df/2, statistic/2).
double gamma_q(double a, double x);

}  // namespace cttp
