#include <doctest.h>

#include <cmath>

#include "cttp/bernoulli.hpp"

using namespace cttp;

namespace {

// Biased coin backed by its own stream so factory-internal randomness and
// coin randomness stay separable.
struct TestCoin {
  RandomStream rng;
  double xi;
  CoinOracle oracle;
  TestCoin(double xi_, uint64_t seed, uint64_t stream)
      : rng(seed, stream), xi(xi_), oracle([this] { return rng.uniform01() < xi ? 1 : 0; }) {}
};

double three_sigma(double p, int64_t n) { return 3.0 * std::sqrt(p * (1 - p) / n); }

}  // namespace

TEST_CASE("geometric distribution basics") {
  RandomStream rng(1, 0);
  for (int i = 0; i < 100; ++i) CHECK(geometric(1.0, rng) == 1);

  const int64_t n = 100000;
  int64_t sum = 0, ones = 0;
  for (int64_t i = 0; i < n; ++i) {
    int64_t g = geometric(0.5, rng);
    CHECK(g >= 1);
    sum += g;
    ones += g == 1;
  }
  // mean 1/p = 2, variance (1-p)/p^2 = 2
  CHECK(std::abs(sum / static_cast<double>(n) - 2.0) < 3.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(ones / static_cast<double>(n) - 0.5) < three_sigma(0.5, n));

  CHECK_THROWS_AS(geometric(0.0, rng), std::invalid_argument);
}

TEST_CASE("linear factory: zero-bias coin never wins") {
  RandomStream rng(2, 0);
  CoinOracle zero([] { return 0; });
  for (int i = 0; i < 200; ++i) CHECK(linear_bf(zero, 2.0, 0.5, rng) == 0);
}

TEST_CASE("linear factory output law and flip cost") {
  const int64_t trials = 100000;
  {
    TestCoin coin(0.25, 3, 1);
    RandomStream rng(3, 2);
    int64_t ones = 0;
    for (int64_t i = 0; i < trials; ++i) ones += linear_bf(coin.oracle, 2.0, 0.5, rng);
    const double freq = ones / static_cast<double>(trials);
    CHECK(std::abs(freq - 0.5) < three_sigma(0.5, trials));  // C*xi = 0.5
  }
  // mean flips <= 9.5 C / zeta on the stated grid
  const struct {
    double C, xi, zeta;
  } grid[] = {{2.0, 0.2, 0.5}, {1.5, 0.3, 0.4}};
  int stream = 10;
  for (auto [C, xi, zeta] : grid) {
    TestCoin coin(xi, 4, static_cast<uint64_t>(stream++));
    RandomStream rng(4, static_cast<uint64_t>(stream++));
    for (int64_t i = 0; i < trials; ++i) linear_bf(coin.oracle, C, zeta, rng);
    const double mean_flips = coin.oracle.flips() / static_cast<double>(trials);
    CHECK(mean_flips <= 9.5 * C / zeta);
  }
}

TEST_CASE("subtraction factory output law and flip cost") {
  const int64_t trials = 100000;
  {
    // xi1 = 1, xi2 = 0: always 1
    CoinOracle one([] { return 1; }), zero([] { return 0; });
    RandomStream rng(5, 0);
    for (int i = 0; i < 200; ++i) CHECK(subtract_bf(one, zero, 1.0, rng) == 1);
  }
  TestCoin c1(0.9, 6, 1), c2(0.2, 6, 2);
  RandomStream rng(6, 3);
  int64_t ones = 0;
  for (int64_t i = 0; i < trials; ++i) ones += subtract_bf(c1.oracle, c2.oracle, 0.5, rng);
  CHECK(std::abs(ones / static_cast<double>(trials) - 0.7) < three_sigma(0.7, trials));
  CHECK(c1.oracle.flips() / static_cast<double>(trials) <= 9.5 / 0.5);
  CHECK(c2.oracle.flips() / static_cast<double>(trials) <= 9.5 / 0.5);
}

TEST_CASE("division factory output law and xi-flip cost") {
  const int64_t trials = 100000;
  {
    TestCoin coin(1.0, 7, 1);  // xi = 1: bias p/xi = 1/2
    RandomStream rng(7, 2);
    int64_t ones = 0;
    for (int64_t i = 0; i < trials; ++i) ones += division_bf(coin.oracle, 0.5, 0.4, rng);
    CHECK(std::abs(ones / static_cast<double>(trials) - 0.5) < three_sigma(0.5, trials));
  }
  const double xi = 0.98, p = 0.5, zeta = 0.48;
  TestCoin coin(xi, 8, 1);
  RandomStream rng(8, 2);
  int64_t ones = 0;
  for (int64_t i = 0; i < trials; ++i) ones += division_bf(coin.oracle, p, zeta, rng);
  const double target = p / xi;  // ~0.5102
  CHECK(std::abs(ones / static_cast<double>(trials) - target) < three_sigma(target, trials));
  CHECK(coin.oracle.flips() / static_cast<double>(trials) <= 9.5 / (xi * zeta));
}

TEST_CASE("coin oracle counts every flip") {
  int calls = 0;
  CoinOracle c([&] {
    ++calls;
    return 1;
  });
  for (int i = 0; i < 5; ++i) c.flip();
  CHECK(c.flips() == 5);
  CHECK(calls == 5);
}
