// Backward deduction for uniform proper q-colorings. Unlike the soft engine,
// an update's outcome cannot be resolved in one shot: Check(t, c) decides
// only whether the outcome at time t equals c, shrinking the surviving color
// list L(t) on a "no" and resolving the full outcome once |L(t)| hits the
// 50*Delta floor. The equality test routes through a division Bernoulli
// factory fed by a neighborhood coin of bias |L \ S| / |L|.
//
// All recursion (Resolve and Check alike) runs on one explicit work stack;
// frames suspend at oracle queries against earlier timestamps and resume
// with the answer. Fixed draw order per frame: evaluate_color draws one list
// index per loop; evaluate_color_eq draws the branch uniform, then neighbor
// checks in ascending id order, then factory randomness.

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cttp/bernoulli.hpp"
#include "cttp/instance.hpp"
#include "cttp/rng.hpp"
#include "cttp/schedule.hpp"

namespace cttp {

struct ColoringSessionConfig {
  ColoringPolicy policy = ColoringPolicy::strict;
  bool force = false;               // skip the policy floor (not the q >= Delta+2 floor)
  uint64_t budget = 1'000'000'000;  // frame pushes per query before aborting
};

// Synchronous variants with oracle callbacks, exposed for direct testing of
// the marginal laws. `oracle_eq(u, c)` must consistently report whether
// neighbor u's outcome equals c. The session engine runs the identical
// procedures on suspension frames.

// Uniform sample from L \ S; removes discovered members of S from L.
int32_t evaluate_color(const ColoringInstance& inst, int32_t v,
                       const std::function<int(int32_t, int32_t)>& oracle_eq, ColorList& list,
                       RandomStream& rng, uint64_t* iterations = nullptr);

// Equality test: 0 surely when c is a neighbor outcome; otherwise 1 with
// probability 1/|L \ S|. Requires |L| > 50*Delta and c in L on entry.
int evaluate_color_eq(const ColoringInstance& inst, int32_t v, int32_t c,
                      const std::function<int(int32_t, int32_t)>& oracle_eq, ColorList& list,
                      RandomStream& rng, uint64_t* coin_flips = nullptr);

// One flip of the |L \ S| / |L| coin: draw c0 uniform from L and report
// whether no neighbor outcome equals c0.
int neighborhood_coin(const ColoringInstance& inst, int32_t v,
                      const std::function<int(int32_t, int32_t)>& oracle_eq,
                      const ColorList& list, RandomStream& rng);

// Slack for the division factory: |L| > 50*Delta and |S| <= Delta give the
// neighborhood coin bias at least 49/50 = 1/2 + 0.48.
constexpr double kColoringDivisionSlack = 0.48;

class ColoringSession {
 public:
  // The session keeps a reference to `inst`, which must outlive it.
  ColoringSession(const ColoringInstance& inst, uint64_t seed, uint64_t stream_id,
                  ColoringSessionConfig cfg = {});

  // Pins must form a proper partial coloring (validated here).
  void set_pins(PinTablePtr pins);

  // Outcome of the update at time t.
  int32_t resolve(Timestamp t);

  // Whether the outcome at time t equals c; shrinks L(t) on a no.
  int check(Timestamp t, int32_t c);

  std::vector<int32_t> local_sample(std::span<const int32_t> lambda_set);

  void reset(uint64_t stream_id);

  const CostStats& stats();
  const MemoState& memo() const { return memo_; }
  MemoState& memo() { return memo_; }
  bool poisoned() const { return poisoned_; }
  int64_t degrade_threshold() const { return degrade_threshold_; }

 private:
  struct Frame {
    enum class Kind : uint8_t { kResolve, kCheck };
    enum class Phase : uint8_t { kInit, kNbr, kGate, kCheckNbr, kBf, kBfCoin, kDegradeWait };
    Kind kind;
    Phase phase;
    Timestamp t;
    int32_t v;
    int32_t c;  // resolve: current proposal; check: the queried color
    int32_t j = 0;
    int32_t coin_color = -1;
    int32_t coin_j = 0;
    int8_t child_bit = -1;
    int8_t result = -1;
    std::optional<DivisionBfMachine> bf;
  };
  struct StepOut {
    enum class What : uint8_t { kDone, kPush } what;
    Frame::Kind kind;
    Timestamp t;
    int32_t c;
  };

  std::optional<int32_t> probe_resolve(Timestamp t);
  std::optional<int> probe_check(Timestamp t, int32_t c) const;
  // Returns the child's bit if pending/immediately answerable, else
  // std::nullopt after filling `out` with the push request.
  std::optional<int> neighbor_bit(Frame& f, int32_t u, int32_t color, StepOut& out);
  StepOut step(Frame& f);
  void push_frame(Frame::Kind kind, Timestamp t, int32_t c);
  int drive();
  int32_t run_resolve(Timestamp t0);

  const ColoringInstance* inst_;
  int64_t degrade_threshold_;
  MemoState memo_;
  RandomStream rng_;
  ColoringSessionConfig cfg_;
  bool poisoned_ = false;
  uint64_t pushes_ = 0;
  std::vector<Frame> stack_;
};

}  // namespace cttp
