#include "cttp/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace cttp {

int64_t inference_batches(int32_t q, double delta) {
  auto r = static_cast<int64_t>(std::ceil(18.0 * std::log(2.0 * q / delta)));
  if (r < 1) r = 1;
  return r % 2 == 0 ? r + 1 : r;
}

int64_t inference_batch_size(int32_t q, double eps) {
  return static_cast<int64_t>(std::ceil(6.0 * q * std::log(20.0 * q) / (eps * eps)));
}

namespace {

struct BatchResult {
  std::vector<double> freq;
  uint64_t completed = 0;
  bool truncated = false;
};

// One batch of s pinned samples on streams [b*s, (b+1)*s). The work budget
// is 10x the batch's running median per-sample cost (rng draws), with the
// median refreshed every 256 samples after a 32-sample warmup; a truncated
// batch keeps the estimate from its completed samples. Per-sample costs are
// tracked in a bounded histogram so the median refresh is O(1) amortized.
template <typename Session>
BatchResult run_batch(Session& session, Timestamp target_time, int32_t q, int64_t b, int64_t s) {
  constexpr size_t kCostBuckets = 4096;  // costs at or above this land in the top bucket
  BatchResult out;
  std::vector<uint64_t> counts(static_cast<size_t>(q), 0);
  std::vector<uint64_t> cost_hist(kCostBuckets, 0);
  double work = 0.0, budget_per_sample = 0.0;
  for (int64_t i = 0; i < s; ++i) {
    session.reset(static_cast<uint64_t>(b) * static_cast<uint64_t>(s) + static_cast<uint64_t>(i));
    const int32_t value = session.resolve(target_time);
    const uint64_t cost = session.stats().rng_draws + 1;
    ++counts[value];
    ++out.completed;
    work += static_cast<double>(cost);
    ++cost_hist[std::min<uint64_t>(cost, kCostBuckets - 1)];
    if (out.completed >= 32 && (out.completed % 256 == 0 || budget_per_sample == 0.0)) {
      uint64_t below = 0;
      const uint64_t half = (out.completed + 1) / 2;
      for (size_t bucket = 0; bucket < kCostBuckets; ++bucket) {
        below += cost_hist[bucket];
        if (below >= half) {
          budget_per_sample = 10.0 * static_cast<double>(bucket);
          break;
        }
      }
    }
    if (budget_per_sample > 0.0 && work > budget_per_sample * static_cast<double>(s)) {
      out.truncated = true;
      break;
    }
  }
  out.freq.resize(static_cast<size_t>(q), 0.0);
  for (int32_t c = 0; c < q; ++c)
    out.freq[c] = static_cast<double>(counts[c]) / static_cast<double>(out.completed);
  return out;
}

template <typename MakeSession>
MarginalEstimate estimate_impl(const Instance& inst, const PinTable& pins, int32_t target,
                               double eps, double delta, const InferenceOptions& opts,
                               MakeSession make_session) {
  const Graph& g = instance_graph(inst);
  const int32_t q = instance_q(inst);
  const int64_t r = opts.batches_override.value_or(inference_batches(q, delta));
  const int64_t s = opts.batch_size_override.value_or(inference_batch_size(q, eps));
  if (r < 1 || r % 2 == 0) throw std::invalid_argument("batch count must be odd and positive");
  if (s < 1) throw std::invalid_argument("batch size must be positive");
  const Timestamp target_time = pred(0, target, g.n);

  std::vector<BatchResult> results(static_cast<size_t>(r));
  std::atomic<int64_t> next{0};
  auto worker = [&] {
    auto session = make_session();
    while (true) {
      const int64_t b = next.fetch_add(1);
      if (b >= r) break;
      results[b] = run_batch(*session, target_time, q, b, s);
    }
  };
  const int jobs = std::max(1, opts.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  MarginalEstimate est;
  est.target = target;
  est.eps = eps;
  est.delta = delta;
  est.batches = r;
  est.batch_size = s;
  for (const auto& br : results) {
    est.samples_used += br.completed;
    est.truncations += br.truncated ? 1 : 0;
  }

  // Coordinate-wise median over batches, then exact zeros for values the
  // pinning forbids at the target, then renormalization.
  est.estimates.resize(static_cast<size_t>(q), 0.0);
  std::vector<double> column(static_cast<size_t>(r));
  for (int32_t c = 0; c < q; ++c) {
    for (int64_t b = 0; b < r; ++b) column[b] = results[b].freq[c];
    auto mid = column.begin() + r / 2;
    std::nth_element(column.begin(), mid, column.end());
    est.estimates[c] = *mid;
  }
  if (std::holds_alternative<ColoringInstance>(inst)) {
    for (int32_t u : g.adj(target))
      if (pins[u] >= 0) est.estimates[pins[u]] = 0.0;
  }
  double total = 0.0;
  for (double x : est.estimates) total += x;
  if (!(total > 0.0)) throw std::runtime_error("inference: all batch estimates are empty");
  for (double& x : est.estimates) x /= total;
  return est;
}

}  // namespace

MarginalEstimate estimate_conditional_marginal(const Instance& inst, const PinTable& pins,
                                               int32_t target, double eps, double delta,
                                               const InferenceOptions& opts) {
  const Graph& g = instance_graph(inst);
  if (target < 0 || target >= g.n) throw std::invalid_argument("inference: target out of range");
  if (static_cast<int32_t>(pins.size()) != g.n)
    throw std::invalid_argument("inference: pin table size mismatch");
  if (pins[target] >= 0) throw std::invalid_argument("inference: target vertex is pinned");
  if (!(eps > 0.0) || eps >= 1.0 || !(delta > 0.0) || delta >= 1.0)
    throw std::invalid_argument("inference: eps and delta must lie in (0, 1)");
  auto shared_pins = std::make_shared<const PinTable>(pins);

  if (const auto* sys = std::get_if<SpinSystem>(&inst)) {
    return estimate_impl(inst, pins, target, eps, delta, opts, [&] {
      SoftConfig cfg;
      cfg.budget = opts.budget;
      auto session = std::make_unique<SoftSession>(*sys, opts.seed, 0, cfg);
      session->set_pins(shared_pins);
      return session;
    });
  }
  const auto& col = std::get<ColoringInstance>(inst);
  return estimate_impl(inst, pins, target, eps, delta, opts, [&] {
    ColoringSessionConfig cfg;
    cfg.policy = opts.policy;
    cfg.budget = opts.budget;
    auto session = std::make_unique<ColoringSession>(col, opts.seed, 0, cfg);
    session->set_pins(shared_pins);
    return session;
  });
}

}  // namespace cttp
