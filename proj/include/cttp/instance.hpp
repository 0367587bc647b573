// Spin-system and coloring instances: domain types, JSON instance documents,
// tractability validation, and convenience model builders.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cttp/graph.hpp"

namespace cttp {

// Soft-constraint q-spin system. Fields and interaction matrices are kept
// normalized: each lambda_v sums to 1 and each A_e has max entry exactly 1.
// Interaction matrices are stored once per undirected edge for the canonical
// orientation (smaller id, larger id); lookups from the other side transpose.
struct SpinSystem {
  Graph graph;
  int32_t q = 2;
  std::vector<double> fields;      // n*q row-major lambda_v(c)
  std::vector<double> field_cdfs;  // n*q running sums, last entry forced to 1.0
  std::vector<double> matrix_pool; // pool of q*q matrices, canonical orientation
  std::vector<uint32_t> slot_matrix;   // per directed adjacency slot: pool index
  std::vector<uint8_t> slot_transpose; // per slot: 1 if this side is the larger id
  double a_min = 1.0;              // min interaction entry over all edges
  std::optional<double> delta;     // slack from a passed validate_soft, if any

  double field(int32_t v, int32_t c) const {
    return fields[static_cast<size_t>(v) * q + c];
  }

  // Interaction weight A_e(neighbor spin x, own candidate c) where the edge
  // is the slot-th directed adjacency entry (slot indexes graph.neighbors).
  double interaction(int64_t slot, int32_t x, int32_t c) const {
    const double* mtx = matrix_pool.data() + static_cast<size_t>(slot_matrix[slot]) * q * q;
    return slot_transpose[slot] ? mtx[static_cast<size_t>(c) * q + x]
                                : mtx[static_cast<size_t>(x) * q + c];
  }

  // Inverse-CDF draw from lambda_v; CDF ties resolve to the higher index so
  // zero-probability spins are unreachable.
  int32_t sample_field(int32_t v, double u01) const;

  // Largest delta for which the soft-constraint condition holds (can be
  // negative when it fails for every delta); equals 1 - 2*Delta*(1 - a_min),
  // clamped to at most 1.
  double delta_max() const;
};

// Uniform proper q-coloring instance. The type maintains q >= Delta + 2
// (irreducibility floor); the 50/65 Delta policy thresholds are enforced by
// build_coloring and by sampler sessions.
struct ColoringInstance {
  Graph graph;
  int32_t q = 2;
};

using Instance = std::variant<SpinSystem, ColoringInstance>;

struct ValidationReport {
  bool ok = false;
  int32_t max_degree = 0;
  double c_threshold = 0.0;  // C(Delta, delta)
  double delta_max = 0.0;
  std::vector<std::string> messages;
};

// C(Delta, delta) = 1 - (1 - delta) / (2 Delta).
inline double soft_threshold(int32_t max_degree, double delta) {
  return 1.0 - (1.0 - delta) / (2.0 * max_degree);
}

// Checks the soft-constraint condition at slack delta plus the normalization
// invariants. Findings are reported, never thrown.
ValidationReport validate_soft(const SpinSystem& sys, double delta);

// Ising model w/ edge activity beta: every edge gets [[beta,1],[1,beta]] for
// beta <= 1, else the normalized [[1,1/beta],[1/beta,1]]. Field pairs are
// normalized on entry. Appends a warning when beta lies outside the window
// ((Delta-0.5)/Delta, Delta/(Delta-0.5)).
SpinSystem build_ising(Graph graph, double beta, std::span<const std::pair<double, double>> vertex_fields,
                       std::vector<std::string>* warnings = nullptr);

// Potts-style system: A(i,j) = beta for i == j and 1 otherwise (beta <= 1
// required), uniform fields. Used by the generator CLI for generic soft tests.
SpinSystem build_potts(Graph graph, int32_t q, double beta);

SpinSystem build_spin_system(Graph graph, int32_t q, std::vector<double> fields,
                             const std::vector<std::vector<double>>& edge_matrices);

enum class ColoringPolicy { strict, permissive };

// strict requires q >= 65*Delta; permissive accepts q >= 50*Delta with a
// warning below 65*Delta that termination is unproven. Throws ModelError
// below the active threshold.
ColoringInstance build_coloring(Graph graph, int32_t q, ColoringPolicy policy,
                                std::vector<std::string>* warnings = nullptr);

// Instance documents (UTF-8 JSON; see README for the three schemas). The
// vertex order in the document fixes the scan order.
Instance load_instance(const std::string& text);
std::string serialize_instance(const Instance& inst);

inline const Graph& instance_graph(const Instance& inst) {
  return std::visit([](const auto& x) -> const Graph& { return x.graph; }, inst);
}
inline int32_t instance_q(const Instance& inst) {
  return std::visit([](const auto& x) { return x.q; }, inst);
}

}  // namespace cttp
