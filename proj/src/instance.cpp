#include "cttp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace cttp {

namespace {

constexpr double kLoadTolerance = 1e-9;
// Post-normalization residue below which values are left untouched, keeping
// load idempotent (reload of serialized output is bit-exact).
constexpr double kExactTolerance = 1e-14;

double neumaier_sum(std::span<const double> xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

void normalize_field_row(std::span<double> row, int32_t v) {
  for (double x : row)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ModelError("field not nonnegative at vertex " + std::to_string(v));
  double s = neumaier_sum(row);
  if (std::abs(s - 1.0) > kLoadTolerance)
    throw ModelError("field not normalized at vertex " + std::to_string(v));
  if (std::abs(s - 1.0) > kExactTolerance)
    for (double& x : row) x /= s;
}

void check_matrix(std::span<const double> mtx) {
  double mx = 0.0;
  for (double x : mtx) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ModelError("interaction entry negative");
    mx = std::max(mx, x);
  }
  if (std::abs(mx - 1.0) > kLoadTolerance) throw ModelError("interaction not normalized");
}

void normalize_matrix(std::span<double> mtx) {
  check_matrix(mtx);
  double mx = *std::max_element(mtx.begin(), mtx.end());
  if (mx != 1.0)
    for (double& x : mtx) x /= mx;
}

}  // namespace

int32_t SpinSystem::sample_field(int32_t v, double u01) const {
  const double* cdf = field_cdfs.data() + static_cast<size_t>(v) * q;
  return static_cast<int32_t>(std::upper_bound(cdf, cdf + q, u01) - cdf);
}

double SpinSystem::delta_max() const {
  if (graph.max_degree == 0) return 1.0;
  return std::min(1.0, 1.0 - 2.0 * graph.max_degree * (1.0 - a_min));
}

namespace {

// Final assembly shared by all builders: computes CDFs and a_min.
void finalize(SpinSystem& sys) {
  const int32_t n = sys.graph.n, q = sys.q;
  sys.field_cdfs.resize(static_cast<size_t>(n) * q);
  for (int32_t v = 0; v < n; ++v) {
    double run = 0.0;
    for (int32_t c = 0; c < q; ++c) {
      run += sys.fields[static_cast<size_t>(v) * q + c];
      sys.field_cdfs[static_cast<size_t>(v) * q + c] = run;
    }
    sys.field_cdfs[static_cast<size_t>(v) * q + (q - 1)] = 1.0;
  }
  sys.a_min = 1.0;
  for (double x : sys.matrix_pool) sys.a_min = std::min(sys.a_min, x);
}

// Wires per-slot matrix indices given one pool entry per edge; matrices must
// already be canonical (indexed by the smaller endpoint's spin first). The
// slot (v -> u) answers "neighbor u has spin x, candidate c at v", which
// reads A[x][c] when u < v and the transpose when u > v.
void wire_slots(SpinSystem& sys, const std::vector<std::pair<Edge, uint32_t>>& edge_pool) {
  const auto& g = sys.graph;
  sys.slot_matrix.assign(g.neighbors.size(), 0);
  sys.slot_transpose.assign(g.neighbors.size(), 0);
  auto place = [&](int32_t owner, int32_t nbr, uint32_t mtx) {
    auto row = g.adj(owner);
    auto it = std::lower_bound(row.begin(), row.end(), nbr);
    int64_t slot = g.offsets[owner] + (it - row.begin());
    sys.slot_matrix[slot] = mtx;
    sys.slot_transpose[slot] = nbr > owner ? 1 : 0;
  };
  for (const auto& [e, idx] : edge_pool) {
    place(e.second, e.first, idx);
    place(e.first, e.second, idx);
  }
}

}  // namespace

ValidationReport validate_soft(const SpinSystem& sys, double delta) {
  ValidationReport rep;
  rep.max_degree = sys.graph.max_degree;
  rep.delta_max = sys.delta_max();
  if (sys.graph.max_degree == 0) {
    rep.ok = true;
    rep.c_threshold = 0.0;
    rep.messages.push_back("no edges: product distribution, condition holds vacuously");
    return rep;
  }
  rep.c_threshold = soft_threshold(sys.graph.max_degree, delta);
  rep.ok = true;
  if (!(delta > 0.0) || delta > 1.0) {
    rep.ok = false;
    rep.messages.push_back("delta must lie in (0, 1]");
  }
  if (sys.a_min < rep.c_threshold) {
    rep.ok = false;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "min interaction entry %.12g below C(Delta,delta) = %.12g; largest feasible "
                  "delta is %.12g",
                  sys.a_min, rep.c_threshold, rep.delta_max);
    rep.messages.push_back(buf);
  }
  for (int32_t v = 0; v < sys.graph.n; ++v) {
    double s = neumaier_sum(std::span(sys.fields).subspan(static_cast<size_t>(v) * sys.q, sys.q));
    if (std::abs(s - 1.0) > kLoadTolerance) {
      rep.ok = false;
      rep.messages.push_back("field not normalized at vertex " + std::to_string(v));
    }
  }
  return rep;
}

SpinSystem build_ising(Graph graph, double beta,
                       std::span<const std::pair<double, double>> vertex_fields,
                       std::vector<std::string>* warnings) {
  if (!(beta > 0.0)) throw ModelError("ising: beta must be positive");
  if (static_cast<int32_t>(vertex_fields.size()) != graph.n)
    throw ModelError("ising: one field pair per vertex required");
  SpinSystem sys;
  sys.q = 2;
  sys.fields.resize(static_cast<size_t>(graph.n) * 2);
  for (int32_t v = 0; v < graph.n; ++v) {
    auto [a, b] = vertex_fields[v];
    if (!(a >= 0.0) || !(b >= 0.0) || a + b <= 0.0)
      throw ModelError("ising: invalid field pair at vertex " + std::to_string(v));
    sys.fields[2 * static_cast<size_t>(v)] = a / (a + b);
    sys.fields[2 * static_cast<size_t>(v) + 1] = b / (a + b);
  }
  const double diag = beta <= 1.0 ? beta : 1.0;
  const double off = beta <= 1.0 ? 1.0 : 1.0 / beta;
  sys.matrix_pool = {diag, off, off, diag};
  std::vector<std::pair<Edge, uint32_t>> pool_edges;
  for (auto e : graph.edges()) pool_edges.emplace_back(e, 0u);
  sys.graph = std::move(graph);
  wire_slots(sys, pool_edges);
  finalize(sys);
  const int32_t dd = sys.graph.max_degree;
  if (warnings && dd >= 1) {
    const double lo = (dd - 0.5) / dd, hi = dd / (dd - 0.5);
    if (!(beta > lo && beta < hi)) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "beta = %.12g outside the window (%.12g, %.12g) for Delta = %d; "
                    "run validate_soft before sampling",
                    beta, lo, hi, dd);
      warnings->push_back(buf);
    }
  }
  return sys;
}

SpinSystem build_potts(Graph graph, int32_t q, double beta) {
  if (q < 2) throw ModelError("potts: q >= 2 required");
  if (!(beta > 0.0) || beta > 1.0) throw ModelError("potts: beta in (0, 1] required");
  SpinSystem sys;
  sys.q = q;
  sys.fields.assign(static_cast<size_t>(graph.n) * q, 1.0 / q);
  sys.matrix_pool.assign(static_cast<size_t>(q) * q, 1.0);
  for (int32_t c = 0; c < q; ++c) sys.matrix_pool[static_cast<size_t>(c) * q + c] = beta;
  std::vector<std::pair<Edge, uint32_t>> pool_edges;
  for (auto e : graph.edges()) pool_edges.emplace_back(e, 0u);
  sys.graph = std::move(graph);
  wire_slots(sys, pool_edges);
  finalize(sys);
  return sys;
}

SpinSystem build_spin_system(Graph graph, int32_t q, std::vector<double> fields,
                             const std::vector<std::vector<double>>& edge_matrices) {
  if (q < 2) throw ModelError("spin system: q >= 2 required");
  auto edges = graph.edges();
  if (edge_matrices.size() != edges.size())
    throw ModelError("spin system: one interaction matrix per edge required");
  if (fields.size() != static_cast<size_t>(graph.n) * q)
    throw ModelError("spin system: field dimension mismatch");
  SpinSystem sys;
  sys.q = q;
  sys.fields = std::move(fields);
  for (int32_t v = 0; v < graph.n; ++v)
    normalize_field_row(std::span(sys.fields).subspan(static_cast<size_t>(v) * q, q), v);
  sys.matrix_pool.resize(edge_matrices.size() * static_cast<size_t>(q) * q);
  std::vector<std::pair<Edge, uint32_t>> pool_edges;
  for (size_t i = 0; i < edges.size(); ++i) {
    if (edge_matrices[i].size() != static_cast<size_t>(q) * q)
      throw ModelError("spin system: interaction matrix dimension mismatch");
    std::copy(edge_matrices[i].begin(), edge_matrices[i].end(),
              sys.matrix_pool.begin() + i * static_cast<size_t>(q) * q);
    normalize_matrix(std::span(sys.matrix_pool).subspan(i * static_cast<size_t>(q) * q,
                                                        static_cast<size_t>(q) * q));
    pool_edges.emplace_back(edges[i], static_cast<uint32_t>(i));
  }
  sys.graph = std::move(graph);
  wire_slots(sys, pool_edges);
  finalize(sys);
  return sys;
}

ColoringInstance build_coloring(Graph graph, int32_t q, ColoringPolicy policy,
                                std::vector<std::string>* warnings) {
  if (q < 2) throw ModelError("coloring: q >= 2 required");
  const int32_t dd = graph.max_degree;
  if (q < dd + 2)
    throw ModelError("coloring: q >= Delta + 2 required for irreducibility (q = " +
                     std::to_string(q) + ", Delta = " + std::to_string(dd) + ")");
  const int64_t strict_floor = 65LL * dd, permissive_floor = 50LL * dd;
  if (policy == ColoringPolicy::strict) {
    if (q < strict_floor)
      throw ModelError("coloring: strict policy requires q >= 65*Delta = " +
                       std::to_string(strict_floor) + ", got q = " + std::to_string(q));
  } else {
    if (q < permissive_floor)
      throw ModelError("coloring: permissive policy requires q >= 50*Delta = " +
                       std::to_string(permissive_floor) + ", got q = " + std::to_string(q));
    if (q < strict_floor && warnings)
      warnings->push_back("q = " + std::to_string(q) + " below 65*Delta = " +
                          std::to_string(strict_floor) +
                          ": distribution is exact on termination but termination is unproven");
  }
  return ColoringInstance{std::move(graph), q};
}

namespace {

using nlohmann::json;

std::vector<Edge> parse_edge_pairs(const json& j) {
  std::vector<Edge> edges;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw ParseError("edge must be a [u, v] pair");
    edges.emplace_back(e[0].get<int32_t>(), e[1].get<int32_t>());
  }
  return edges;
}

Instance load_spin(const json& j) {
  const auto q = j.at("q").get<int32_t>();
  if (q < 2) throw ModelError("spin: q >= 2 required");
  const auto& verts = j.at("vertices");
  if (!verts.is_array() || verts.empty()) throw ParseError("spin: nonempty vertices array required");
  const auto n = static_cast<int32_t>(verts.size());
  std::vector<double> fields;
  fields.reserve(static_cast<size_t>(n) * q);
  for (const auto& v : verts) {
    const auto& lam = v.at("lambda");
    if (static_cast<int32_t>(lam.size()) != q) throw ModelError("spin: lambda dimension mismatch");
    for (const auto& x : lam) fields.push_back(x.get<double>());
  }
  std::vector<Edge> edges;
  std::vector<std::vector<double>> mats;
  for (const auto& e : j.at("edges")) {
    int32_t u = e.at("u").get<int32_t>(), v = e.at("v").get<int32_t>();
    const auto& rows = e.at("A");
    if (static_cast<int32_t>(rows.size()) != q) throw ModelError("spin: A dimension mismatch");
    std::vector<double> mtx(static_cast<size_t>(q) * q);
    for (int32_t i = 0; i < q; ++i) {
      if (static_cast<int32_t>(rows[i].size()) != q) throw ModelError("spin: A dimension mismatch");
      for (int32_t k = 0; k < q; ++k) mtx[static_cast<size_t>(i) * q + k] = rows[i][k].get<double>();
    }
    // The document stores A indexed (spin of u, spin of v); canonicalize to
    // the (smaller id, larger id) orientation.
    if (u > v) {
      std::vector<double> tr(mtx.size());
      for (int32_t i = 0; i < q; ++i)
        for (int32_t k = 0; k < q; ++k)
          tr[static_cast<size_t>(k) * q + i] = mtx[static_cast<size_t>(i) * q + k];
      mtx = std::move(tr);
      std::swap(u, v);
    }
    edges.emplace_back(u, v);
    mats.push_back(std::move(mtx));
  }
  // Align matrices with the canonical edge order of the graph.
  std::vector<size_t> order(edges.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Graph g = graph_from_edges(n, edges);
  auto canonical = g.edges();
  std::vector<std::vector<double>> mats_sorted(mats.size());
  std::vector<std::pair<Edge, size_t>> tagged;
  tagged.reserve(edges.size());
  for (size_t i = 0; i < edges.size(); ++i) tagged.emplace_back(edges[i], i);
  std::sort(tagged.begin(), tagged.end());
  for (size_t i = 0; i < canonical.size(); ++i) {
    auto it = std::lower_bound(tagged.begin(), tagged.end(), canonical[i],
                               [](const auto& a, const Edge& b) { return a.first < b; });
    mats_sorted[i] = std::move(mats[it->second]);
  }
  return build_spin_system(std::move(g), q, std::move(fields), mats_sorted);
}

Instance load_ising(const json& j) {
  const double beta = j.at("beta").get<double>();
  const auto& f = j.at("fields");
  if (!f.is_array() || f.empty()) throw ParseError("ising: nonempty fields array required");
  std::vector<std::pair<double, double>> pairs;
  for (const auto& p : f) {
    if (!p.is_array() || p.size() != 2) throw ParseError("ising: field must be a pair");
    pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  Graph g = graph_from_edges(static_cast<int32_t>(pairs.size()),
                             parse_edge_pairs(j.at("edges")));
  return build_ising(std::move(g), beta, pairs);
}

Instance load_coloring(const json& j) {
  const auto q = j.at("q").get<int32_t>();
  const auto n = j.at("n").get<int32_t>();
  Graph g = graph_from_edges(n, parse_edge_pairs(j.at("edges")));
  if (q < 2) throw ModelError("coloring: q >= 2 required");
  if (q < g.max_degree + 2)
    throw ModelError("coloring: q >= Delta + 2 required for irreducibility");
  return ColoringInstance{std::move(g), q};
}

}  // namespace

Instance load_instance(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  try {
    const auto model = j.at("model").get<std::string>();
    if (model == "spin") return load_spin(j);
    if (model == "ising") return load_ising(j);
    if (model == "coloring") return load_coloring(j);
    throw ParseError("unknown model: " + model);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed instance document: ") + e.what());
  }
}

std::string serialize_instance(const Instance& inst) {
  nlohmann::ordered_json j;
  if (const auto* sys = std::get_if<SpinSystem>(&inst)) {
    j["model"] = "spin";
    j["q"] = sys->q;
    auto verts = nlohmann::ordered_json::array();
    for (int32_t v = 0; v < sys->graph.n; ++v) {
      std::vector<double> lam(sys->fields.begin() + static_cast<size_t>(v) * sys->q,
                              sys->fields.begin() + static_cast<size_t>(v + 1) * sys->q);
      verts.push_back({{"lambda", lam}});
    }
    j["vertices"] = std::move(verts);
    auto edges = nlohmann::ordered_json::array();
    for (auto [u, v] : sys->graph.edges()) {
      auto row = sys->graph.adj(v);
      auto it = std::lower_bound(row.begin(), row.end(), u);
      int64_t slot = sys->graph.offsets[v] + (it - row.begin());
      uint32_t mi = sys->slot_matrix[slot];
      auto rows = nlohmann::ordered_json::array();
      for (int32_t i = 0; i < sys->q; ++i) {
        std::vector<double> r(sys->matrix_pool.begin() +
                                  (static_cast<size_t>(mi) * sys->q + i) * sys->q,
                              sys->matrix_pool.begin() +
                                  (static_cast<size_t>(mi) * sys->q + i + 1) * sys->q);
        rows.push_back(r);
      }
      edges.push_back({{"u", u}, {"v", v}, {"A", rows}});
    }
    j["edges"] = std::move(edges);
  } else {
    const auto& inst_c = std::get<ColoringInstance>(inst);
    j["model"] = "coloring";
    j["q"] = inst_c.q;
    j["n"] = inst_c.graph.n;
    auto edges = nlohmann::ordered_json::array();
    for (auto [u, v] : inst_c.graph.edges()) edges.push_back({u, v});
    j["edges"] = std::move(edges);
  }
  return j.dump();
}

}  // namespace cttp
