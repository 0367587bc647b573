// Backward deduction for soft-constraint spin systems: resolving the time-0
// state of the stationary systematic scan by recursing through the grand
// coupling, with a rejection-sampling marginal oracle at each update.
//
// Recursion runs on an explicit work stack. A frame is one evaluation in
// progress; it suspends whenever it needs the outcome of an earlier update
// that is not memoized yet, and resumes once the child frame has stored that
// outcome. Randomness is consumed in execution order, each variable drawn at
// first use: per iteration the proposal c_i, then r_{i,u} in ascending
// neighbor order (recursive draws interleave at suspension points).

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cttp/instance.hpp"
#include "cttp/rng.hpp"
#include "cttp/schedule.hpp"

namespace cttp {

struct SoftConfig {
  bool break_early = false;  // stop the neighbor loop at the first rejection
  bool force = false;        // sample even if validate_soft fails
  uint64_t budget = 1'000'000'000;  // frame pushes per query before aborting
};

// Synchronous marginal sampling oracle: repeatedly propose c from lambda_v
// and accept unless some neighbor draw r >= C also fails the interaction
// test r >= A(oracle(u), c). Output is distributed exactly as mu_v^sigma
// when `oracle` consistently reports sigma. Exposed for direct testing; the
// session engine runs the identical procedure on suspension frames.
int32_t evaluate_soft(const SpinSystem& sys, int32_t v,
                      const std::function<int32_t(int32_t)>& oracle, double c_threshold,
                      RandomStream& rng, bool break_early = false,
                      uint64_t* oracle_calls = nullptr, uint64_t* iterations = nullptr);

class SoftSession {
 public:
  // Validates the soft-constraint condition (at sys.delta if set, else at
  // the instance's delta_max) unless cfg.force is set. The session keeps a
  // reference to `sys`, which must outlive it.
  SoftSession(const SpinSystem& sys, uint64_t seed, uint64_t stream_id, SoftConfig cfg = {});

  // Pins must reference a table of size n with values in [q) or -1; pinned
  // vertices short-circuit resolution. Set before the first query.
  void set_pins(PinTablePtr pins);

  // Outcome of the update at time t (memoized; write-once).
  int32_t resolve(Timestamp t);

  // X(v) = resolve(pred_0(v)) for each v, in the given order. Over fresh
  // sessions the joint output follows the Gibbs marginal on the query set.
  std::vector<int32_t> local_sample(std::span<const int32_t> lambda_set);

  // Re-initializes to a fresh session on a new stream, reusing storage.
  void reset(uint64_t stream_id);

  const CostStats& stats();
  const MemoState& memo() const { return memo_; }
  MemoState& memo() { return memo_; }
  double threshold() const { return c_threshold_; }
  bool poisoned() const { return poisoned_; }

 private:
  struct Frame {
    Timestamp t;
    int32_t v;
    int32_t c = -1;  // current proposal; -1 requests a fresh iteration
    int32_t j = 0;   // index into the adjacency row
    bool flag = true;
    bool have_r = false;
    double r = 0.0;
  };
  struct StepOut {
    bool done;
    Timestamp child;
  };

  std::optional<int32_t> probe(Timestamp t);
  StepOut step(Frame& f);
  int32_t run(Timestamp t0);
  void push_frame(Timestamp t);

  const SpinSystem* sys_;
  MemoState memo_;
  RandomStream rng_;
  SoftConfig cfg_;
  double c_threshold_;
  bool poisoned_ = false;
  uint64_t pushes_ = 0;
  std::vector<Frame> stack_;
};

}  // namespace cttp
