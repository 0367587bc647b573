#include "cttp/bernoulli.hpp"

#include <cmath>

namespace cttp {

int64_t geometric(double p, RandomStream& rng) {
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("geometric: p in (0, 1] required");
  if (p == 1.0) return 1;
  double u = rng.uniform01();
  while (u == 0.0) u = rng.uniform01();
  double g = std::ceil(std::log(u) / std::log1p(-p));
  return g < 1.0 ? 1 : static_cast<int64_t>(g);
}

namespace {

template <typename Machine, typename FlipFn>
int drive(Machine& machine, RandomStream& rng, FlipFn&& flip) {
  for (uint64_t n = 0; n < kFactoryFlipBudget; ++n) {
    CoinRequest r = machine.step(rng);
    if (r == CoinRequest::kDone) return machine.result();
    machine.feed(flip(r));
  }
  throw std::runtime_error("Bernoulli factory exceeded the flip budget");
}

}  // namespace

int linear_bf(CoinOracle& coin, double C, double zeta, RandomStream& rng) {
  LinearBfMachine m(C, zeta);
  return drive(m, rng, [&](CoinRequest) { return coin.flip(); });
}

int subtract_bf(CoinOracle& coin1, CoinOracle& coin2, double zeta, RandomStream& rng) {
  SubtractBfMachine m(zeta);
  return drive(m, rng, [&](CoinRequest r) {
    return r == CoinRequest::kCoin1 ? coin1.flip() : coin2.flip();
  });
}

int division_bf(CoinOracle& coin, double p, double zeta, RandomStream& rng) {
  DivisionBfMachine m(p, zeta);
  return drive(m, rng, [&](CoinRequest) { return coin.flip(); });
}

}  // namespace cttp
