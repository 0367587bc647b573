#include "cttp/soft_engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace cttp {

int32_t evaluate_soft(const SpinSystem& sys, int32_t v,
                      const std::function<int32_t(int32_t)>& oracle, double c_threshold,
                      RandomStream& rng, bool break_early, uint64_t* oracle_calls,
                      uint64_t* iterations) {
  const auto row = sys.graph.adj(v);
  const int64_t base = sys.graph.offsets[v];
  while (true) {
    const int32_t c = sys.sample_field(v, rng.uniform01());
    if (iterations) ++*iterations;
    bool flag = true;
    for (size_t j = 0; j < row.size(); ++j) {
      const double r = rng.uniform01();
      if (r < c_threshold) continue;
      const int32_t x = oracle(row[j]);
      if (oracle_calls) ++*oracle_calls;
      if (r >= sys.interaction(base + static_cast<int64_t>(j), x, c)) {
        flag = false;
        if (break_early) break;
      }
    }
    if (flag) return c;
  }
}

SoftSession::SoftSession(const SpinSystem& sys, uint64_t seed, uint64_t stream_id, SoftConfig cfg)
    : sys_(&sys), rng_(seed, stream_id), cfg_(cfg) {
  const double dmax = sys.delta_max();
  if (sys.delta) {
    if (!cfg_.force && !validate_soft(sys, *sys.delta).ok)
      throw ModelError("soft-constraint condition fails at the stored delta; "
                       "use force to sample anyway");
    c_threshold_ = std::min(soft_threshold(std::max(sys.graph.max_degree, 1), *sys.delta),
                            sys.a_min);
  } else {
    if (!cfg_.force && !(dmax > 0.0))
      throw ModelError("soft-constraint condition fails for every delta (delta_max = " +
                       std::to_string(dmax) + "); use force to sample anyway");
    c_threshold_ = sys.a_min;
  }
  if (sys.graph.max_degree == 0) c_threshold_ = 1.0;
}

void SoftSession::set_pins(PinTablePtr pins) {
  if (pins) {
    if (static_cast<int32_t>(pins->size()) != sys_->graph.n)
      throw std::invalid_argument("pin table size mismatch");
    for (int32_t v = 0; v < sys_->graph.n; ++v) {
      const int32_t p = (*pins)[v];
      if (p < -1 || p >= sys_->q) throw ModelError("pin value out of range");
      if (p >= 0 && sys_->field(v, p) <= 0.0)
        throw ModelError("pinning has zero probability at vertex " + std::to_string(v));
    }
  }
  memo_.pins = std::move(pins);
}

void SoftSession::reset(uint64_t stream_id) {
  memo_.clear();
  rng_.reseed(rng_.seed(), stream_id);
  poisoned_ = false;
  stack_.clear();
}

const CostStats& SoftSession::stats() {
  memo_.stats.rng_draws = rng_.draw_count();
  return memo_.stats;
}

std::optional<int32_t> SoftSession::probe(Timestamp t) {
  if (auto m = memo_.memo_get(t)) return m;
  const int32_t pin = memo_.pin_of(scan_vertex(t, sys_->graph.n));
  if (pin >= 0) {
    memo_.memo_set(t, pin);
    return pin;
  }
  return std::nullopt;
}

SoftSession::StepOut SoftSession::step(Frame& f) {
  const Graph& g = sys_->graph;
  const auto row = g.adj(f.v);
  const auto deg = static_cast<int32_t>(row.size());
  const int64_t base = g.offsets[f.v];
  while (true) {
    if (f.c < 0) {
      f.c = sys_->sample_field(f.v, rng_.uniform01());
      f.flag = true;
      f.j = 0;
      f.have_r = false;
      ++memo_.stats.evaluate_iterations;
    }
    while (f.j < deg) {
      if (!f.have_r) {
        f.r = rng_.uniform01();
        f.have_r = true;
      }
      if (f.r >= c_threshold_) {
        const Timestamp tc = pred(f.t, row[f.j], g.n);
        if (!(tc < f.t && tc > f.t - g.n))
          throw std::logic_error("soft engine: recursion target outside (t-n, t)");
        auto val = probe(tc);
        if (!val) return {false, tc};
        if (f.r >= sys_->interaction(base + f.j, *val, f.c)) {
          f.flag = false;
          if (cfg_.break_early) {
            f.j = deg;
            f.have_r = false;
            break;
          }
        }
      }
      ++f.j;
      f.have_r = false;
    }
    if (f.flag) {
      memo_.memo_set(f.t, f.c);
      return {true, 0};
    }
    f.c = -1;
  }
}

void SoftSession::push_frame(Timestamp t) {
  if (++pushes_ > cfg_.budget) {
    poisoned_ = true;
    throw BudgetAbort("soft engine: recursion budget exhausted; session poisoned");
  }
  ++memo_.stats.resolve_calls;
  stack_.push_back(Frame{t, scan_vertex(t, sys_->graph.n)});
}

int32_t SoftSession::run(Timestamp t0) {
  if (poisoned_) throw BudgetAbort("session poisoned by an earlier budget abort");
  if (auto v = probe(t0)) return *v;
  pushes_ = 0;
  push_frame(t0);
  while (!stack_.empty()) {
    StepOut out = step(stack_.back());
    if (out.done)
      stack_.pop_back();
    else
      push_frame(out.child);
  }
  return *memo_.memo_get(t0);
}

int32_t SoftSession::resolve(Timestamp t) {
  if (t > 0) throw std::invalid_argument("resolve: timestamps must be <= 0");
  return run(t);
}

std::vector<int32_t> SoftSession::local_sample(std::span<const int32_t> lambda_set) {
  std::vector<int32_t> out;
  out.reserve(lambda_set.size());
  for (int32_t v : lambda_set) {
    if (v < 0 || v >= sys_->graph.n) throw std::invalid_argument("query vertex out of range");
    out.push_back(run(pred(0, v, sys_->graph.n)));
  }
  return out;
}

}  // namespace cttp
