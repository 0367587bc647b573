#include <doctest.h>

#include <cmath>

#include "cttp/oracle.hpp"

using namespace cttp;

namespace {

Instance ising_path3(double beta) {
  std::vector<std::pair<double, double>> fields(3, {0.5, 0.5});
  return build_ising(gen_path(3), beta, fields);
}

Instance one_vertex(double a, double b) {
  std::vector<std::pair<double, double>> fields{{a, b}};
  return build_ising(graph_from_edges(1, {}), 1.0, fields);
}

Instance fieldless_edge(double beta) {
  std::vector<std::pair<double, double>> fields{{1, 1}, {1, 1}};
  return build_ising(gen_path(2), beta, fields);
}

}  // namespace

TEST_CASE("single-vertex table is the field") {
  auto dist = enumerate_gibbs(one_vertex(0.3, 0.7));
  REQUIRE(dist.support.size() == 2);
  CHECK(dist.probs[*dist.index_of(std::vector<int32_t>{0})] == doctest::Approx(0.3));
  CHECK(dist.probs[*dist.index_of(std::vector<int32_t>{1})] == doctest::Approx(0.7));
}

TEST_CASE("single-edge 3-coloring is uniform over the six proper pairs") {
  auto inst = Instance{ColoringInstance{gen_path(2), 3}};
  auto dist = enumerate_gibbs(inst);
  REQUIRE(dist.support.size() == 6);
  for (double p : dist.probs) CHECK(p == doctest::Approx(1.0 / 6.0));
  CHECK(!dist.index_of(std::vector<int32_t>{1, 1}).has_value());
}

TEST_CASE("3-path ising table matches the closed form") {
  const double beta = 0.9;
  auto dist = enumerate_gibbs(ising_path3(beta));
  REQUIRE(dist.support.size() == 8);
  // weights: beta^(#agreeing adjacent pairs); fields uniform
  const double z = 2 * beta * beta + 4 * beta + 2;  // over one field normalization
  const double p_all_equal = beta * beta / z;
  CHECK(dist.probs[*dist.index_of(std::vector<int32_t>{0, 0, 0})] ==
        doctest::Approx(p_all_equal));
  CHECK(dist.probs[*dist.index_of(std::vector<int32_t>{1, 1, 1})] ==
        doctest::Approx(p_all_equal));

  // cross-check against an independent summation order (vertex-last instead
  // of vertex-first enumeration)
  double total = 0.0, agree3 = 0.0;
  for (int32_t c = 0; c < 2; ++c)
    for (int32_t b = 0; b < 2; ++b)
      for (int32_t a = 0; a < 2; ++a) {
        double w = std::pow(beta, (a == b) + (b == c));
        total += w;
        if (a == b && b == c) agree3 += w / 2.0;
      }
  CHECK(p_all_equal == doctest::Approx(agree3 / total));
}

TEST_CASE("pinning conditions the table") {
  PinTable pins{-1, 0, -1};  // middle vertex pinned to spin 0
  auto dist = enumerate_gibbs(ising_path3(0.9), &pins);
  REQUIRE(dist.vertices == std::vector<int32_t>{0, 2});
  REQUIRE(dist.support.size() == 4);
  // conditional factorizes: each endpoint independently beta:1
  const double p0 = 0.9 / 1.9;
  CHECK(dist.probs[*dist.index_of(std::vector<int32_t>{0, 0})] ==
        doctest::Approx(p0 * p0));
  CHECK(dist.probs[*dist.index_of(std::vector<int32_t>{1, 0})] ==
        doctest::Approx((1 - p0) * p0));

  PinTable bad{0, 0, -1};  // adjacent equal pins in a coloring have zero mass
  auto col = Instance{ColoringInstance{gen_path(3), 5}};
  CHECK_THROWS_AS(enumerate_gibbs(col, &bad), ModelError);
}

TEST_CASE("enumeration cap is enforced") {
  auto col = Instance{ColoringInstance{gen_path(12), 14}};
  CHECK_THROWS_AS(enumerate_gibbs(col), ModelError);
}

TEST_CASE("marginalization composes and degenerates correctly") {
  auto dist = enumerate_gibbs(ising_path3(0.8));
  auto to_empty = exact_marginal(dist, std::vector<int32_t>{});
  REQUIRE(to_empty.support.size() == 1);
  CHECK(to_empty.probs[0] == doctest::Approx(1.0));

  auto identity = exact_marginal(dist, dist.vertices);
  CHECK(identity.support.size() == dist.support.size());

  // two-step equals one-step
  auto ab = exact_marginal(dist, std::vector<int32_t>{0, 1});
  auto a1 = exact_marginal(ab, std::vector<int32_t>{0});
  auto a2 = exact_marginal(dist, std::vector<int32_t>{0});
  REQUIRE(a1.support.size() == a2.support.size());
  for (size_t i = 0; i < a1.support.size(); ++i) {
    auto idx = a2.index_of(a1.support[i]);
    REQUIRE(idx.has_value());
    CHECK(a1.probs[i] == doctest::Approx(a2.probs[*idx]));
  }

  // spin-flip symmetry: one endpoint of a fieldless edge is fair
  auto edge = exact_marginal(enumerate_gibbs(fieldless_edge(0.9)), std::vector<int32_t>{1});
  CHECK(edge.probs[0] == doctest::Approx(0.5));
}

TEST_CASE("enumeration is permutation-invariant") {
  // relabeling the path 0-1-2 as 2-1-0 permutes the table consistently
  auto a = enumerate_gibbs(ising_path3(0.85));
  std::vector<std::pair<double, double>> fields(3, {0.5, 0.5});
  auto relabeled =
      build_ising(graph_from_edges(3, std::vector<Edge>{{2, 1}, {1, 0}}), 0.85, fields);
  auto b = enumerate_gibbs(Instance{relabeled});
  for (size_t i = 0; i < a.support.size(); ++i) {
    std::vector<int32_t> flipped{a.support[i][2], a.support[i][1], a.support[i][0]};
    auto idx = b.index_of(flipped);
    REQUIRE(idx.has_value());
    CHECK(a.probs[i] == doctest::Approx(b.probs[*idx]));
  }
}

TEST_CASE("tv_distance on hand-computed cases") {
  auto dist = enumerate_gibbs(Instance{ColoringInstance{graph_from_edges(1, {}), 4}});
  REQUIRE(dist.support.size() == 4);

  Histogram exact;
  for (int c = 0; c < 4; ++c)
    for (int k = 0; k < 25; ++k) exact.add(dist.code(std::vector<int32_t>{c}));
  CHECK(tv_distance(dist, exact) == doctest::Approx(0.0));

  Histogram lumped;  // counts (3,1,0,0)/4 against uniform over 4
  for (int k = 0; k < 75; ++k) lumped.add(dist.code(std::vector<int32_t>{0}));
  for (int k = 0; k < 25; ++k) lumped.add(dist.code(std::vector<int32_t>{1}));
  CHECK(tv_distance(dist, lumped) == doctest::Approx(0.5));

  // all mass on an outcome with p = 0.5 in a two-point table
  auto half = enumerate_gibbs(Instance{ColoringInstance{graph_from_edges(1, {}), 2}});
  Histogram onesided;
  for (int k = 0; k < 10; ++k) onesided.add(half.code(std::vector<int32_t>{0}));
  CHECK(tv_distance(half, onesided) == doctest::Approx(0.5));
}

TEST_CASE("chi-square statistic and p-values match references") {
  // 2 cells, counts (60, 40) vs expected (50, 50): statistic 4.0, p ~ 0.0455
  std::vector<double> expected{50, 50};
  std::vector<uint64_t> observed{60, 40};
  auto r = chi_square_test(expected, observed);
  CHECK(r.statistic == doctest::Approx(4.0));
  CHECK(r.df == 1);
  CHECK(r.p_value == doctest::Approx(0.04550026).epsilon(1e-5));

  std::vector<uint64_t> same{50, 50};
  CHECK(chi_square_test(expected, same).p_value == doctest::Approx(1.0));

  std::vector<uint64_t> far{100, 0};
  CHECK(chi_square_test(expected, far).p_value < 1e-6);

  // pooling: cells under 5 expected merge into one bucket
  std::vector<double> exp2{100, 3, 2, 95};
  std::vector<uint64_t> obs2{99, 2, 4, 95};
  auto pooled = chi_square_test(exp2, obs2);
  CHECK(pooled.cells_after_pooling == 3);
  CHECK(pooled.df == 2);

  std::vector<double> tiny{1.0};
  std::vector<uint64_t> tobs{1};
  CHECK_THROWS_AS(chi_square_test(tiny, tobs), std::invalid_argument);

  // reference values for the regularized upper incomplete gamma
  CHECK(gamma_q(0.5, 0.5) == doctest::Approx(std::erfc(std::sqrt(0.5))).epsilon(1e-10));
  CHECK(gamma_q(5.0, 5.0) == doctest::Approx(0.44049329).epsilon(1e-6));
}

TEST_CASE("forward glauber: degenerate runs and desk-scale agreement") {
  auto inst = ising_path3(0.9);
  auto init = initial_config(inst);
  RandomStream rng(3, 0);
  CHECK(forward_glauber(inst, 0, rng, init) == init);

  // single vertex, one update: draw from the field
  auto single = one_vertex(0.3, 0.7);
  int64_t ones = 0;
  const int64_t reps = 100000;
  for (int64_t i = 0; i < reps; ++i) {
    rng.reseed(3, static_cast<uint64_t>(i));
    ones += forward_glauber(single, 1, rng, {0})[0];
  }
  const double sigma = std::sqrt(0.3 * 0.7 / reps);
  CHECK(std::abs(static_cast<double>(ones) / reps - 0.7) < 4 * sigma);

  // long-run joint law matches enumeration within TV 0.02
  auto dist = enumerate_gibbs(inst);
  Histogram hist;
  const int64_t runs = 20000;
  for (int64_t i = 0; i < runs; ++i) {
    rng.reseed(11, static_cast<uint64_t>(i));
    auto cfg = forward_glauber(inst, 3000 * 3, rng, init);
    hist.add(dist.code(cfg));
  }
  CHECK(tv_distance(dist, hist) < 0.02);
}

TEST_CASE("forward glauber preserves properness for colorings") {
  auto inst = Instance{ColoringInstance{gen_cycle(6), 8}};
  auto init = initial_config(inst);
  RandomStream rng(5, 0);
  auto cfg = forward_glauber(inst, 500, rng, init);
  const auto& g = instance_graph(inst);
  for (int32_t v = 0; v < g.n; ++v)
    for (int32_t u : g.adj(v)) CHECK(cfg[u] != cfg[v]);
  CHECK_THROWS_AS(forward_glauber(inst, 1, rng, std::vector<int32_t>(6, 0)), ModelError);
}
