// Simple undirected graphs in CSR form, plus the benchmark graph families.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cttp {

// Malformed input document (bad JSON, wrong shapes).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally valid document describing an invalid model.
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Edge = std::pair<int32_t, int32_t>;

// Simple undirected graph. Vertex ids are 0..n-1; per-vertex neighbor lists
// are sorted and duplicate-free; max_degree is the largest list length.
struct Graph {
  int32_t n = 0;
  std::vector<int64_t> offsets;    // size n+1
  std::vector<int32_t> neighbors;  // flat adjacency, sorted per vertex
  int32_t max_degree = 0;

  int32_t degree(int32_t v) const {
    return static_cast<int32_t>(offsets[v + 1] - offsets[v]);
  }
  std::span<const int32_t> adj(int32_t v) const {
    return {neighbors.data() + offsets[v], static_cast<size_t>(degree(v))};
  }
  int64_t edge_count() const { return static_cast<int64_t>(neighbors.size()) / 2; }

  // Edges as (u, v) with u < v, in scan order of u.
  std::vector<Edge> edges() const;
};

// Validates simplicity (ids in range, no self-loops, no duplicates) and
// builds the CSR representation. Throws ModelError on violations.
Graph graph_from_edges(int32_t n, std::span<const Edge> edges);

Graph gen_path(int32_t n);
Graph gen_cycle(int32_t n);
Graph gen_star(int32_t leaves);               // K_{1,leaves}: center is vertex 0
Graph gen_grid(int32_t rows, int32_t cols);   // rows x cols lattice
// Pairing-model construction: pair n*d half-edge points uniformly at random
// and retry the whole pairing until it yields a simple graph.
Graph gen_random_regular(int32_t n, int32_t d, uint64_t seed);

Graph gen_graph(const std::string& family, int32_t n, int32_t d, uint64_t seed);

}  // namespace cttp
