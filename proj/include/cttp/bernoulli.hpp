// Bernoulli factories: Huber's linear factory, the subtraction factory built
// on it, and the division factory the coloring engine uses.
//
// Each factory is written as a resumable machine that suspends whenever it
// needs a flip of an input coin. The synchronous entry points drive the
// machines with CoinOracle callbacks; the coloring engine drives the same
// machines with coins whose flips recurse through the memoized history.
//
// Internal randomness (geometric jumps, filters, fair bits, constant-p
// draws) comes from the RandomStream passed to step(); only the unknown-bias
// coins suspend.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>

#include "cttp/rng.hpp"

namespace cttp {

// A coin of unknown bias: the currency of the factory stack.
class CoinOracle {
 public:
  explicit CoinOracle(std::function<int()> fn) : fn_(std::move(fn)) {}
  int flip() {
    ++flips_;
    return fn_();
  }
  uint64_t flips() const { return flips_; }

 private:
  std::function<int()> fn_;
  uint64_t flips_ = 0;
};

// Geometric on support {1, 2, ...} with success parameter p: P(G = g) =
// (1-p)^(g-1) p, sampled by inversion.
int64_t geometric(double p, RandomStream& rng);

enum class CoinRequest : uint8_t { kCoin1, kCoin2, kDone };

// LinearBF(coin, C, zeta): a draw of bias C*xi under the promise
// C*xi <= 1 - zeta. Random walk i <- i - 1 + (1-B)*G with G geometric of
// parameter (C-1)/C; past i >= k a (1 + zeta/2)^(-i) filter fires (evaluated
// in log space) and the parameters update C <- C(1+zeta/2), zeta <- zeta/2,
// k <- 2k. Returns 1 exactly when the walk hits 0.
class LinearBfMachine {
 public:
  LinearBfMachine(double C, double zeta)
      : c_(C), k_(4.6 / zeta), zeta_(zeta < 0.644 ? zeta : 0.644) {
    if (!(C > 1.0) || !(zeta > 0.0)) throw std::invalid_argument("LinearBF: need C > 1, zeta > 0");
  }

  // Advances until the next coin flip is needed or the draw is decided.
  CoinRequest step(RandomStream& rng) {
    while (true) {
      if (waiting_) return CoinRequest::kCoin1;
      i_ += -1 + (1 - fed_) * geometric((c_ - 1.0) / c_, rng);
      if (i_ == 0) {
        result_ = 1;
        return CoinRequest::kDone;
      }
      if (i_ >= k_) {
        // filter: survive with probability (1 + zeta/2)^(-i)
        if (!(std::log(rng.uniform01()) < -static_cast<double>(i_) * std::log1p(zeta_ / 2.0))) {
          result_ = 0;
          return CoinRequest::kDone;
        }
        c_ *= 1.0 + zeta_ / 2.0;
        zeta_ /= 2.0;
        k_ *= 2.0;
      }
      waiting_ = true;
    }
  }

  void feed(int bit) {
    fed_ = bit;
    waiting_ = false;
  }
  int result() const { return result_; }

 private:
  double c_;
  double k_;
  double zeta_;
  int64_t i_ = 1;
  bool waiting_ = true;  // a coin flip is owed before the first walk step
  int fed_ = 0;
  int result_ = -1;
};

// SubtractBF(coin1, coin2, zeta): a draw of bias xi1 - xi2 under the promise
// xi1 - xi2 >= zeta, realized as 1 - LinearBF(O_(1-xi1+xi2)/2, 2, zeta). The
// composite coin flips a fair bit: on 1 it reports 1 - coin1, on 0 coin2.
class SubtractBfMachine {
 public:
  explicit SubtractBfMachine(double zeta) : inner_(2.0, zeta) {}

  CoinRequest step(RandomStream& rng) {
    while (true) {
      if (composite_pending_) return want_first_ ? CoinRequest::kCoin1 : CoinRequest::kCoin2;
      CoinRequest r = inner_.step(rng);
      if (r == CoinRequest::kDone) {
        result_ = 1 - inner_.result();
        return CoinRequest::kDone;
      }
      composite_pending_ = true;
      want_first_ = rng.fair_bit() == 1;
    }
  }

  void feed(int bit) {
    inner_.feed(want_first_ ? 1 - bit : bit);
    composite_pending_ = false;
  }
  int result() const { return result_; }

 private:
  LinearBfMachine inner_;
  bool composite_pending_ = false;
  bool want_first_ = false;
  int result_ = -1;
};

// BernoulliDivision(coin, p, zeta): a draw of bias p/xi under the promise
// xi - p >= zeta. Loop: flip a fair bit; on 1 return 1 with probability p;
// on 0 return 0 if a SubtractBF(coin, constant-p coin, zeta) draw is 1.
// The constant-p coin consumes RandomStream uniforms only, never the
// xi-coin, so coin-flip accounting isolates the xi cost.
class DivisionBfMachine {
 public:
  DivisionBfMachine(double p, double zeta) : p_(p), zeta_(zeta) {
    if (p < 0.0 || p > 1.0 || !(zeta > 0.0))
      throw std::invalid_argument("BernoulliDivision: need p in [0,1], zeta > 0");
  }

  CoinRequest step(RandomStream& rng) {
    while (true) {
      if (sub_) {
        CoinRequest r = sub_->step(rng);
        if (r == CoinRequest::kCoin1) return CoinRequest::kCoin1;  // the xi coin
        if (r == CoinRequest::kCoin2) {
          sub_->feed(rng.uniform01() < p_ ? 1 : 0);  // constant-p coin
          continue;
        }
        int draw = sub_->result();
        sub_.reset();
        if (draw == 1) {
          result_ = 0;
          return CoinRequest::kDone;
        }
        continue;  // next round
      }
      if (rng.fair_bit() == 1) {
        if (rng.uniform01() < p_) {
          result_ = 1;
          return CoinRequest::kDone;
        }
        continue;
      }
      sub_.emplace(zeta_);
    }
  }

  void feed(int bit) { sub_->feed(bit); }
  int result() const { return result_; }

 private:
  double p_;
  double zeta_;
  std::optional<SubtractBfMachine> sub_;
  int result_ = -1;
};

// Synchronous entry points. Each run is bounded by a hard flip budget as a
// termination safety net (the theory gives finite expectation).
constexpr uint64_t kFactoryFlipBudget = 10'000'000;

int linear_bf(CoinOracle& coin, double C, double zeta, RandomStream& rng);
int subtract_bf(CoinOracle& coin1, CoinOracle& coin2, double zeta, RandomStream& rng);
int division_bf(CoinOracle& coin, double p, double zeta, RandomStream& rng);

}  // namespace cttp
