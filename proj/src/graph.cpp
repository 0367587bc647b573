#include "cttp/graph.hpp"

#include <algorithm>
#include <numeric>

#include "cttp/rng.hpp"

namespace cttp {

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(static_cast<size_t>(edge_count()));
  for (int32_t v = 0; v < n; ++v)
    for (int32_t u : adj(v))
      if (v < u) out.emplace_back(v, u);
  return out;
}

Graph graph_from_edges(int32_t n, std::span<const Edge> edges) {
  if (n < 1) throw ModelError("graph must have at least one vertex");
  Graph g;
  g.n = n;
  std::vector<int32_t> deg(n, 0);
  for (auto [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw ModelError("edge endpoint out of range: (" + std::to_string(u) + "," +
                       std::to_string(v) + ")");
    if (u == v) throw ModelError("self-loop at vertex " + std::to_string(u));
    ++deg[u];
    ++deg[v];
  }
  g.offsets.assign(n + 1, 0);
  for (int32_t v = 0; v < n; ++v) g.offsets[v + 1] = g.offsets[v] + deg[v];
  g.neighbors.resize(static_cast<size_t>(g.offsets[n]));
  std::vector<int64_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (auto [u, v] : edges) {
    g.neighbors[cursor[u]++] = v;
    g.neighbors[cursor[v]++] = u;
  }
  for (int32_t v = 0; v < n; ++v) {
    auto* first = g.neighbors.data() + g.offsets[v];
    auto* last = g.neighbors.data() + g.offsets[v + 1];
    std::sort(first, last);
    if (std::adjacent_find(first, last) != last)
      throw ModelError("duplicate edge at vertex " + std::to_string(v));
    g.max_degree = std::max(g.max_degree, deg[v]);
  }
  return g;
}

Graph gen_path(int32_t n) {
  std::vector<Edge> e;
  for (int32_t v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
  return graph_from_edges(n, e);
}

Graph gen_cycle(int32_t n) {
  if (n < 3) throw ModelError("cycle needs n >= 3");
  std::vector<Edge> e;
  for (int32_t v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
  e.emplace_back(n - 1, 0);
  return graph_from_edges(n, e);
}

Graph gen_star(int32_t leaves) {
  if (leaves < 1) throw ModelError("star needs at least one leaf");
  std::vector<Edge> e;
  for (int32_t v = 1; v <= leaves; ++v) e.emplace_back(0, v);
  return graph_from_edges(leaves + 1, e);
}

Graph gen_grid(int32_t rows, int32_t cols) {
  if (rows < 1 || cols < 1) throw ModelError("grid needs positive dimensions");
  auto id = [cols](int32_t r, int32_t c) { return r * cols + c; };
  std::vector<Edge> e;
  for (int32_t r = 0; r < rows; ++r)
    for (int32_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) e.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) e.emplace_back(id(r, c), id(r + 1, c));
    }
  return graph_from_edges(rows * cols, e);
}

Graph gen_random_regular(int32_t n, int32_t d, uint64_t seed) {
  if (n < 1 || d < 0 || d >= n) throw ModelError("random_regular needs 0 <= d < n");
  if ((static_cast<int64_t>(n) * d) % 2 != 0)
    throw ModelError("random_regular infeasible: n*d is odd");
  if (d == 0) return graph_from_edges(n, {});

  RandomStream rng(seed, /*stream_id=*/0);
  std::vector<int32_t> points(static_cast<size_t>(n) * d);
  for (size_t i = 0; i < points.size(); ++i) points[i] = static_cast<int32_t>(i / d);

  constexpr int kMaxTries = 5000;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    for (size_t i = points.size() - 1; i > 0; --i) {
      size_t j = rng.uniform_below(i + 1);
      std::swap(points[i], points[j]);
    }
    std::vector<Edge> e;
    e.reserve(points.size() / 2);
    bool ok = true;
    for (size_t i = 0; ok && i < points.size(); i += 2) {
      int32_t u = points[i], v = points[i + 1];
      if (u == v) ok = false;
      e.emplace_back(std::min(u, v), std::max(u, v));
    }
    if (!ok) continue;
    std::sort(e.begin(), e.end());
    if (std::adjacent_find(e.begin(), e.end()) != e.end()) continue;
    return graph_from_edges(n, e);
  }
  throw ModelError("random_regular: pairing model failed to produce a simple graph");
}

Graph gen_graph(const std::string& family, int32_t n, int32_t d, uint64_t seed) {
  if (family == "path") return gen_path(n);
  if (family == "cycle") return gen_cycle(n);
  if (family == "star") return gen_star(n);
  if (family == "grid") return gen_grid(n, d > 0 ? d : n);
  if (family == "random_regular") return gen_random_regular(n, d, seed);
  throw ModelError("unknown graph family: " + family);
}

}  // namespace cttp
