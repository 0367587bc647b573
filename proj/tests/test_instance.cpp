#include <doctest.h>

#include <cmath>

#include "cttp/instance.hpp"

using namespace cttp;

namespace {

const char* kSingleVertexIsing = R"({"model":"ising","beta":1.1,"fields":[[1,1]],"edges":[]})";

std::string spin_doc_with_max(double mx) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                R"({"model":"spin","q":2,"vertices":[{"lambda":[0.5,0.5]},{"lambda":[0.5,0.5]}],)"
                R"("edges":[{"u":0,"v":1,"A":[[%.17g,1.0],[0.9,0.95]]}]})",
                mx);
  return buf;
}

}  // namespace

TEST_CASE("single-vertex ising document loads to a fieldless system") {
  auto inst = load_instance(kSingleVertexIsing);
  const auto& sys = std::get<SpinSystem>(inst);
  CHECK(sys.graph.n == 1);
  CHECK(sys.graph.edge_count() == 0);
  CHECK(sys.field(0, 0) == 0.5);
  CHECK(sys.field(0, 1) == 0.5);
}

TEST_CASE("unnormalized interaction matrices are rejected") {
  CHECK_THROWS_WITH_AS(load_instance(spin_doc_with_max(1.3)),
                       doctest::Contains("interaction not normalized"), ModelError);
  CHECK_NOTHROW(load_instance(spin_doc_with_max(1.0)));
}

TEST_CASE("3-path coloring document loads structurally") {
  auto inst = load_instance(R"({"model":"coloring","q":65,"edges":[[0,1],[1,2]],"n":3})");
  const auto& col = std::get<ColoringInstance>(inst);
  CHECK(col.q == 65);
  CHECK(col.graph.max_degree == 2);
}

TEST_CASE("malformed documents raise parse errors") {
  CHECK_THROWS_AS(load_instance("not json"), ParseError);
  CHECK_THROWS_AS(load_instance(R"({"model":"mystery"})"), ParseError);
  CHECK_THROWS_AS(load_instance(R"({"model":"spin","q":2,"vertices":[],"edges":[]})"),
                  ParseError);
}

TEST_CASE("negative weights are model errors") {
  CHECK_THROWS_AS(
      load_instance(
          R"({"model":"spin","q":2,"vertices":[{"lambda":[-0.1,1.1]}],"edges":[]})"),
      ModelError);
}

TEST_CASE("validate_soft matches the threshold formula") {
  // C(1, delta -> 0) -> 0.5 and C(2, 0.5) = 0.875
  CHECK(soft_threshold(1, 1e-12) == doctest::Approx(0.5));
  CHECK(soft_threshold(2, 0.5) == doctest::Approx(0.875));

  std::vector<std::pair<double, double>> fields{{0.5, 0.5}, {0.5, 0.5}};
  auto sys = build_ising(gen_path(2), 1.2, fields);
  const double amin = 1.0 / 1.2;
  CHECK(sys.a_min == doctest::Approx(amin));
  const double dmax = 1.0 - 2.0 * (1.0 - amin);
  CHECK(sys.delta_max() == doctest::Approx(dmax));

  // ok is monotone nonincreasing in delta, flipping exactly at delta_max
  CHECK(validate_soft(sys, dmax - 1e-12).ok);
  CHECK(!validate_soft(sys, dmax + 1e-6).ok);
  bool prev = true;
  for (double d = 0.05; d <= 1.0; d += 0.05) {
    bool ok = validate_soft(sys, d).ok;
    CHECK((prev || !ok));  // once it fails it stays failed
    prev = ok;
  }
}

TEST_CASE("degree-zero systems validate as product distributions") {
  std::vector<std::pair<double, double>> fields{{0.3, 0.7}};
  auto sys = build_ising(graph_from_edges(1, {}), 0.9, fields);
  auto rep = validate_soft(sys, 0.5);
  CHECK(rep.ok);
  CHECK(rep.messages.size() == 1);
}

TEST_CASE("build_ising normalizes and warns outside the window") {
  std::vector<std::pair<double, double>> fields(3, {1.0, 1.0});
  Graph path3 = gen_path(3);  // Delta = 2, window (0.75, 4/3)

  std::vector<std::string> warnings;
  auto inside = build_ising(path3, 0.9, fields, &warnings);
  CHECK(warnings.empty());
  CHECK(inside.a_min == doctest::Approx(0.9));
  // normalization invariants hold exactly
  double mx = 0.0;
  for (double x : inside.matrix_pool) mx = std::max(mx, x);
  CHECK(mx == 1.0);

  auto outside = build_ising(path3, 0.7, fields, &warnings);
  CHECK(warnings.size() == 1);
  CHECK(outside.delta_max() == doctest::Approx(1.0 - 4.0 * 0.3));
  CHECK(!validate_soft(outside, 0.01).ok);

  auto beta1 = build_ising(path3, 1.0, fields);
  for (double x : beta1.matrix_pool) CHECK(x == 1.0);

  CHECK_THROWS_AS(build_ising(path3, 0.0, fields), ModelError);
}

TEST_CASE("coloring policies gate on 50 and 65 Delta") {
  CHECK_NOTHROW(build_coloring(gen_path(2), 65, ColoringPolicy::strict));  // Delta=1
  CHECK_THROWS_AS(build_coloring(gen_star(3), 150, ColoringPolicy::strict), ModelError);
  std::vector<std::string> warnings;
  auto exact_floor = build_coloring(gen_star(3), 150, ColoringPolicy::permissive, &warnings);
  CHECK(exact_floor.q == 150);  // exactly 50*Delta, accepted with a warning
  CHECK(warnings.size() == 1);
  CHECK_THROWS_AS(build_coloring(gen_star(3), 149, ColoringPolicy::permissive), ModelError);
  CHECK_THROWS_AS(build_coloring(gen_path(3), 3, ColoringPolicy::permissive), ModelError);
}

TEST_CASE("serialize/load round-trips bit-exactly") {
  const char* doc = R"({"model":"spin","q":3,
    "vertices":[{"lambda":[0.2,0.3,0.5]},{"lambda":[0.25,0.25,0.5]},{"lambda":[0.4,0.4,0.2]}],
    "edges":[{"u":2,"v":0,"A":[[1.0,0.91,0.87],[0.9,0.99,0.8],[0.93,0.88,0.97]]},
             {"u":1,"v":2,"A":[[0.8,1.0,0.9],[0.85,0.95,0.92],[0.9,0.8,0.99]]}]})";
  auto first = load_instance(doc);
  auto text1 = serialize_instance(first);
  auto second = load_instance(text1);
  auto text2 = serialize_instance(second);
  CHECK(text1 == text2);
  const auto& a = std::get<SpinSystem>(first);
  const auto& b = std::get<SpinSystem>(second);
  CHECK(a.fields == b.fields);
  CHECK(a.matrix_pool == b.matrix_pool);

  auto col = load_instance(R"({"model":"coloring","q":70,"edges":[[0,1]],"n":2})");
  CHECK(serialize_instance(load_instance(serialize_instance(col))) == serialize_instance(col));
}

TEST_CASE("asymmetric matrices transpose consistently across the edge") {
  // A is stored canonically for (0,1); querying from either endpoint must
  // agree on the same physical weight A[spin at 0][spin at 1].
  const char* doc = R"({"model":"spin","q":2,
    "vertices":[{"lambda":[0.5,0.5]},{"lambda":[0.5,0.5]}],
    "edges":[{"u":0,"v":1,"A":[[1.0,0.8],[0.9,0.85]]}]})";
  auto inst = load_instance(doc);
  const auto& sys = std::get<SpinSystem>(inst);
  // slot of neighbor 1 within vertex 0's row, and vice versa
  const int64_t slot01 = sys.graph.offsets[0];
  const int64_t slot10 = sys.graph.offsets[1];
  for (int32_t s0 = 0; s0 < 2; ++s0)
    for (int32_t s1 = 0; s1 < 2; ++s1) {
      // from vertex 0, the neighbor (vertex 1) has spin s1 and own candidate s0
      const double from0 = sys.interaction(slot01, s1, s0);
      const double from1 = sys.interaction(slot10, s0, s1);
      CHECK(from0 == from1);
    }
  CHECK(sys.interaction(slot01, 1, 0) == 0.8);  // neighbor spin 1 at vertex 1 -> A[0][1]
  CHECK(sys.interaction(slot10, 1, 0) == 0.9);  // neighbor spin 1 at vertex 0 -> A[1][0]
}

TEST_CASE("field cdfs are monotone, end at one, and skip zero-mass spins") {
  auto sys = build_spin_system(
      gen_path(2), 3, {0.0, 0.25, 0.75, 0.5, 0.5, 0.0},
      {{1.0, 0.9, 0.9, 0.9, 1.0, 0.9, 0.9, 0.9, 1.0}});
  for (int32_t v = 0; v < 2; ++v) {
    double prev = 0.0;
    for (int32_t c = 0; c < 3; ++c) {
      double x = sys.field_cdfs[static_cast<size_t>(v) * 3 + c];
      CHECK(x >= prev);
      prev = x;
    }
    CHECK(prev == 1.0);
  }
  // zero-probability spins are unreachable for any u in [0,1)
  CHECK(sys.sample_field(0, 0.0) == 1);
  CHECK(sys.sample_field(0, 0.2499) == 1);
  CHECK(sys.sample_field(0, 0.25) == 2);
  CHECK(sys.sample_field(0, 0.999999) == 2);
  CHECK(sys.sample_field(1, 0.5) == 1);
  CHECK(sys.sample_field(1, 0.999999) == 1);
}
