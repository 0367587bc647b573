#include "cttp/coloring_engine.hpp"

#include <stdexcept>
#include <string>

namespace cttp {

int32_t evaluate_color(const ColoringInstance& inst, int32_t v,
                       const std::function<int(int32_t, int32_t)>& oracle_eq, ColorList& list,
                       RandomStream& rng, uint64_t* iterations) {
  if (list.size() < 50LL * inst.graph.max_degree)
    throw std::logic_error("evaluate_color: entry bound |L| >= 50*Delta violated");
  const auto row = inst.graph.adj(v);
  while (true) {
    if (iterations) ++*iterations;
    const int32_t c = list.at(static_cast<int64_t>(rng.uniform_below(list.size())));
    bool hit = false;
    for (int32_t u : row)
      if (oracle_eq(u, c) == 1) {
        hit = true;
        break;
      }
    if (!hit) return c;
    list.remove(c);
  }
}

int neighborhood_coin(const ColoringInstance& inst, int32_t v,
                      const std::function<int(int32_t, int32_t)>& oracle_eq,
                      const ColorList& list, RandomStream& rng) {
  const int32_t c0 = list.at(static_cast<int64_t>(rng.uniform_below(list.size())));
  for (int32_t u : inst.graph.adj(v))
    if (oracle_eq(u, c0) == 1) return 0;
  return 1;
}

int evaluate_color_eq(const ColoringInstance& inst, int32_t v, int32_t c,
                      const std::function<int(int32_t, int32_t)>& oracle_eq, ColorList& list,
                      RandomStream& rng, uint64_t* coin_flips) {
  if (list.size() <= 50LL * inst.graph.max_degree)
    throw std::logic_error("evaluate_color_eq: entry bound |L| > 50*Delta violated");
  if (!list.contains(c)) throw std::logic_error("evaluate_color_eq: c not in L");
  if (rng.uniform01() < 1.0 - 2.0 / static_cast<double>(list.size())) return 0;
  for (int32_t u : inst.graph.adj(v))
    if (oracle_eq(u, c) == 1) return 0;
  CoinOracle coin([&] { return neighborhood_coin(inst, v, oracle_eq, list, rng); });
  const int bit = division_bf(coin, 0.5, kColoringDivisionSlack, rng);
  if (coin_flips) *coin_flips += coin.flips();
  return bit;
}

ColoringSession::ColoringSession(const ColoringInstance& inst, uint64_t seed, uint64_t stream_id,
                                 ColoringSessionConfig cfg)
    : inst_(&inst), rng_(seed, stream_id), cfg_(cfg) {
  const int32_t dd = inst.graph.max_degree;
  degrade_threshold_ = 50LL * dd;
  if (inst.q < dd + 2)
    throw ModelError("coloring session: q >= Delta + 2 required for irreducibility");
  if (!cfg_.force) {
    const int64_t floor = cfg_.policy == ColoringPolicy::strict ? 65LL * dd : 50LL * dd;
    if (inst.q < floor)
      throw ModelError("coloring session: q = " + std::to_string(inst.q) +
                       " below the policy floor " + std::to_string(floor));
  }
}

void ColoringSession::set_pins(PinTablePtr pins) {
  if (pins) {
    const Graph& g = inst_->graph;
    if (static_cast<int32_t>(pins->size()) != g.n)
      throw std::invalid_argument("pin table size mismatch");
    for (int32_t v = 0; v < g.n; ++v) {
      const int32_t p = (*pins)[v];
      if (p < -1 || p >= inst_->q) throw ModelError("pin value out of range");
      if (p < 0) continue;
      for (int32_t u : g.adj(v))
        if (u > v && (*pins)[u] == p)
          throw ModelError("pins are not a proper partial coloring on edge (" +
                           std::to_string(v) + "," + std::to_string(u) + ")");
    }
  }
  memo_.pins = std::move(pins);
}

void ColoringSession::reset(uint64_t stream_id) {
  memo_.clear();
  rng_.reseed(rng_.seed(), stream_id);
  poisoned_ = false;
  stack_.clear();
}

const CostStats& ColoringSession::stats() {
  memo_.stats.rng_draws = rng_.draw_count();
  return memo_.stats;
}

std::optional<int32_t> ColoringSession::probe_resolve(Timestamp t) {
  if (auto m = memo_.memo_get(t)) return m;
  const int32_t pin = memo_.pin_of(scan_vertex(t, inst_->graph.n));
  if (pin >= 0) {
    memo_.memo_set(t, pin);
    return pin;
  }
  return std::nullopt;
}

std::optional<int> ColoringSession::probe_check(Timestamp t, int32_t c) const {
  if (auto m = memo_.memo_get(t)) return *m == c ? 1 : 0;
  const int32_t pin = memo_.pin_of(scan_vertex(t, inst_->graph.n));
  if (pin >= 0) return pin == c ? 1 : 0;
  if (!memo_.list_contains(t, inst_->q, c)) return 0;
  return std::nullopt;
}

std::optional<int> ColoringSession::neighbor_bit(Frame& f, int32_t u, int32_t color,
                                                 StepOut& out) {
  if (f.child_bit >= 0) {
    int bit = f.child_bit;
    f.child_bit = -1;
    return bit;
  }
  const Timestamp tc = pred(f.t, u, inst_->graph.n);
  if (!(tc < f.t && tc > f.t - inst_->graph.n))
    throw std::logic_error("coloring engine: recursion target outside (t-n, t)");
  if (auto b = probe_check(tc, color)) return b;
  out = {StepOut::What::kPush, Frame::Kind::kCheck, tc, color};
  return std::nullopt;
}

ColoringSession::StepOut ColoringSession::step(Frame& f) {
  const Graph& g = inst_->graph;
  const int32_t q = inst_->q;
  const auto row = g.adj(f.v);
  const auto deg = static_cast<int32_t>(row.size());
  StepOut out{StepOut::What::kDone, Frame::Kind::kResolve, 0, 0};

  switch (f.phase) {
    // ---- Resolve: uniform sample from L(t) \ S via repeated proposals ----
    case Frame::Phase::kInit:
    resolve_iteration: {
      const int64_t lsize = memo_.list_size(f.t, q);
      f.c = memo_.list_at(f.t, q, static_cast<int64_t>(rng_.uniform_below(lsize)));
      f.j = 0;
      ++memo_.stats.evaluate_iterations;
      f.phase = Frame::Phase::kNbr;
    }
      [[fallthrough]];
    case Frame::Phase::kNbr:
      while (f.j < deg) {
        auto bit = neighbor_bit(f, row[f.j], f.c, out);
        if (!bit) return out;
        if (*bit == 1) {
          memo_.list_remove(f.t, q, f.c);
          goto resolve_iteration;
        }
        ++f.j;
      }
      memo_.memo_set(f.t, f.c);
      f.result = 0;  // resolve outcomes are read back from the memo, not this channel
      return {StepOut::What::kDone, f.kind, 0, 0};

    // ---- Check: equality test with list shrinking ----
    case Frame::Phase::kGate: {
      const int64_t lsize = memo_.list_size(f.t, q);
      if (lsize <= degrade_threshold_) {
        f.phase = Frame::Phase::kDegradeWait;
        return {StepOut::What::kPush, Frame::Kind::kResolve, f.t, -1};
      }
      if (rng_.uniform01() < 1.0 - 2.0 / static_cast<double>(lsize)) {
        f.result = 0;
        break;
      }
      f.j = 0;
      f.phase = Frame::Phase::kCheckNbr;
    }
      [[fallthrough]];
    case Frame::Phase::kCheckNbr:
      while (f.j < deg) {
        auto bit = neighbor_bit(f, row[f.j], f.c, out);
        if (!bit) return out;
        if (*bit == 1) {
          f.result = 0;
          goto finish_check;
        }
        ++f.j;
      }
      f.bf.emplace(0.5, kColoringDivisionSlack);
      f.phase = Frame::Phase::kBf;
      [[fallthrough]];
    case Frame::Phase::kBf:
    bf_advance: {
      const CoinRequest req = f.bf->step(rng_);
      if (req == CoinRequest::kDone) {
        f.result = static_cast<int8_t>(f.bf->result());
        f.bf.reset();
        break;
      }
      const int64_t lsize = memo_.list_size(f.t, q);
      f.coin_color = memo_.list_at(f.t, q, static_cast<int64_t>(rng_.uniform_below(lsize)));
      f.coin_j = 0;
      ++memo_.stats.coin_flips;
      f.phase = Frame::Phase::kBfCoin;
    }
      [[fallthrough]];
    case Frame::Phase::kBfCoin:
      while (f.coin_j < deg) {
        auto bit = neighbor_bit(f, row[f.coin_j], f.coin_color, out);
        if (!bit) return out;
        if (*bit == 1) {
          f.bf->feed(0);
          f.phase = Frame::Phase::kBf;
          goto bf_advance;
        }
        ++f.coin_j;
      }
      f.bf->feed(1);
      f.phase = Frame::Phase::kBf;
      goto bf_advance;

    case Frame::Phase::kDegradeWait:
      // Child Resolve(t) has stored the full outcome; report equality
      // without touching the list or running the equality test.
      f.result = static_cast<int8_t>(*memo_.memo_get(f.t) == f.c ? 1 : 0);
      return {StepOut::What::kDone, f.kind, 0, 0};
  }

finish_check:
  if (f.result == 1)
    memo_.memo_set(f.t, f.c);
  else
    memo_.list_remove(f.t, inst_->q, f.c);
  return {StepOut::What::kDone, f.kind, 0, 0};
}

void ColoringSession::push_frame(Frame::Kind kind, Timestamp t, int32_t c) {
  if (++pushes_ > cfg_.budget) {
    poisoned_ = true;
    throw BudgetAbort("coloring engine: recursion budget exhausted; session poisoned");
  }
  Frame f;
  f.kind = kind;
  f.t = t;
  f.v = scan_vertex(t, inst_->graph.n);
  f.c = c;
  if (kind == Frame::Kind::kResolve) {
    // Entry bound; necessarily violated when force bypasses the policy floor.
    if (!cfg_.force && memo_.list_size(t, inst_->q) < degrade_threshold_)
      throw std::logic_error("coloring engine: |L(t)| >= 50*Delta entry bound violated");
    f.phase = Frame::Phase::kInit;
    ++memo_.stats.resolve_calls;
  } else {
    f.phase = Frame::Phase::kGate;
    ++memo_.stats.check_calls;
  }
  stack_.push_back(std::move(f));
}

int ColoringSession::drive() {
  while (true) {
    StepOut o = step(stack_.back());
    if (o.what == StepOut::What::kPush) {
      push_frame(o.kind, o.t, o.c);
      continue;
    }
    const int res = stack_.back().result;
    const Frame::Kind kind = stack_.back().kind;
    stack_.pop_back();
    if (stack_.empty()) return res;
    if (kind == Frame::Kind::kCheck) stack_.back().child_bit = static_cast<int8_t>(res);
  }
}

int32_t ColoringSession::run_resolve(Timestamp t0) {
  if (poisoned_) throw BudgetAbort("session poisoned by an earlier budget abort");
  if (auto v = probe_resolve(t0)) return *v;
  pushes_ = 0;
  push_frame(Frame::Kind::kResolve, t0, -1);
  drive();
  return *memo_.memo_get(t0);
}

int32_t ColoringSession::resolve(Timestamp t) {
  if (t > 0) throw std::invalid_argument("resolve: timestamps must be <= 0");
  return run_resolve(t);
}

int ColoringSession::check(Timestamp t, int32_t c) {
  if (t > 0) throw std::invalid_argument("check: timestamps must be <= 0");
  if (c < 0 || c >= inst_->q) throw std::invalid_argument("check: color out of range");
  if (poisoned_) throw BudgetAbort("session poisoned by an earlier budget abort");
  if (auto b = probe_check(t, c)) return *b;
  pushes_ = 0;
  push_frame(Frame::Kind::kCheck, t, c);
  return drive();
}

std::vector<int32_t> ColoringSession::local_sample(std::span<const int32_t> lambda_set) {
  std::vector<int32_t> out;
  out.reserve(lambda_set.size());
  for (int32_t v : lambda_set) {
    if (v < 0 || v >= inst_->graph.n) throw std::invalid_argument("query vertex out of range");
    out.push_back(run_resolve(pred(0, v, inst_->graph.n)));
  }
  return out;
}

}  // namespace cttp
