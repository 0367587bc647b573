#include "cttp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cttp {

void ExactDistribution::rebuild_index() {
  index_.clear();
  index_.reserve(support.size());
  for (size_t i = 0; i < support.size(); ++i) index_.emplace(code(support[i]), i);
}

namespace {

// Unnormalized weight of a full configuration.
double config_weight(const Instance& inst, std::span<const int32_t> sigma) {
  if (const auto* sys = std::get_if<SpinSystem>(&inst)) {
    double w = 1.0;
    for (int32_t v = 0; v < sys->graph.n; ++v) w *= sys->field(v, sigma[v]);
    for (int32_t v = 0; v < sys->graph.n && w > 0.0; ++v) {
      auto row = sys->graph.adj(v);
      for (size_t j = 0; j < row.size(); ++j) {
        int32_t u = row[j];
        if (u < v) continue;  // count each edge once
        w *= sys->interaction(sys->graph.offsets[v] + static_cast<int64_t>(j), sigma[u], sigma[v]);
      }
    }
    return w;
  }
  const auto& col = std::get<ColoringInstance>(inst);
  for (int32_t v = 0; v < col.graph.n; ++v)
    for (int32_t u : col.graph.adj(v))
      if (u > v && sigma[u] == sigma[v]) return 0.0;
  return 1.0;
}

}  // namespace

ExactDistribution enumerate_gibbs(const Instance& inst, const PinTable* pins, int64_t cap) {
  const Graph& g = instance_graph(inst);
  const int32_t q = instance_q(inst);
  ExactDistribution dist;
  dist.q = q;
  std::vector<int32_t> sigma(g.n, 0);
  for (int32_t v = 0; v < g.n; ++v) {
    int32_t p = pins ? (*pins)[v] : -1;
    if (p >= 0) {
      if (p >= q) throw ModelError("pinning value out of range");
      sigma[v] = p;
    } else {
      dist.vertices.push_back(v);
    }
  }
  const auto free_n = static_cast<int64_t>(dist.vertices.size());
  double cells = std::pow(static_cast<double>(q), static_cast<double>(free_n));
  if (cells > static_cast<double>(cap))
    throw ModelError("enumerate_gibbs: q^(free vertices) exceeds the enumeration cap");

  std::vector<int32_t> counter(free_n, 0);
  double total = 0.0;
  while (true) {
    for (int64_t i = 0; i < free_n; ++i) sigma[dist.vertices[i]] = counter[i];
    double w = config_weight(inst, sigma);
    if (w > 0.0) {
      dist.support.push_back(counter);
      dist.probs.push_back(w);
      total += w;
    }
    int64_t i = 0;
    for (; i < free_n; ++i) {
      if (++counter[i] < q) break;
      counter[i] = 0;
    }
    if (i == free_n) break;
    if (free_n == 0) break;
  }
  if (total <= 0.0) throw ModelError("enumerate_gibbs: pinning has zero total weight");
  for (double& p : dist.probs) p /= total;
  dist.log_z = std::log(total);
  dist.rebuild_index();
  return dist;
}

ExactDistribution exact_marginal(const ExactDistribution& dist, std::span<const int32_t> sub) {
  std::vector<size_t> which;
  for (int32_t v : sub) {
    auto it = std::find(dist.vertices.begin(), dist.vertices.end(), v);
    if (it == dist.vertices.end())
      throw std::invalid_argument("exact_marginal: vertex not in the table");
    which.push_back(static_cast<size_t>(it - dist.vertices.begin()));
  }
  ExactDistribution out;
  out.vertices.assign(sub.begin(), sub.end());
  out.q = dist.q;
  out.log_z = dist.log_z;
  absl::flat_hash_map<uint64_t, size_t> seen;
  std::vector<int32_t> proj(sub.size());
  for (size_t row = 0; row < dist.support.size(); ++row) {
    for (size_t i = 0; i < which.size(); ++i) proj[i] = dist.support[row][which[i]];
    uint64_t code = out.code(proj);
    auto [it, inserted] = seen.emplace(code, out.support.size());
    if (inserted) {
      out.support.push_back(proj);
      out.probs.push_back(0.0);
    }
    out.probs[it->second] += dist.probs[row];
  }
  out.rebuild_index();
  return out;
}

std::vector<int32_t> initial_config(const Instance& inst) {
  const Graph& g = instance_graph(inst);
  const int32_t q = instance_q(inst);
  std::vector<int32_t> sigma(g.n, 0);
  if (const auto* sys = std::get_if<SpinSystem>(&inst)) {
    for (int32_t v = 0; v < g.n; ++v) {
      int32_t c = 0;
      while (c < q && sys->field(v, c) <= 0.0) ++c;
      if (c == q) throw ModelError("vertex with all-zero field");
      sigma[v] = c;
    }
    return sigma;
  }
  // Greedy proper coloring; q >= Delta + 1 guarantees success.
  for (int32_t v = 0; v < g.n; ++v) {
    int32_t c = 0;
    for (bool retry = true; retry;) {
      retry = false;
      for (int32_t u : g.adj(v))
        if (u < v && sigma[u] == c) {
          ++c;
          retry = true;
          break;
        }
    }
    if (c >= q) throw ModelError("greedy coloring failed; q too small");
    sigma[v] = c;
  }
  return sigma;
}

std::vector<int32_t> forward_glauber(const Instance& inst, int64_t t_total, RandomStream& rng,
                                     std::vector<int32_t> sigma) {
  const Graph& g = instance_graph(inst);
  const int32_t q = instance_q(inst);
  if (static_cast<int32_t>(sigma.size()) != g.n)
    throw std::invalid_argument("forward_glauber: initial configuration size mismatch");
  if (config_weight(inst, sigma) <= 0.0)
    throw ModelError("forward_glauber: initial configuration has zero weight");

  if (const auto* sys = std::get_if<SpinSystem>(&inst)) {
    std::vector<double> w(q);
    for (Timestamp t = -t_total + 1; t <= 0; ++t) {
      const int32_t v = scan_vertex(t, g.n);
      double total = 0.0;
      for (int32_t c = 0; c < q; ++c) {
        double wc = sys->field(v, c);
        auto row = g.adj(v);
        for (size_t j = 0; j < row.size() && wc > 0.0; ++j)
          wc *= sys->interaction(g.offsets[v] + static_cast<int64_t>(j), sigma[row[j]], c);
        w[c] = wc;
        total += wc;
      }
      double u01 = rng.uniform01() * total;
      double run = 0.0;
      int32_t pick = q - 1;
      for (int32_t c = 0; c < q; ++c) {
        run += w[c];
        if (u01 < run) {
          pick = c;
          break;
        }
      }
      sigma[v] = pick;
    }
    return sigma;
  }

  const auto& col = std::get<ColoringInstance>(inst);
  std::vector<int64_t> stamp(q, -1);
  int64_t gen = 0;
  for (Timestamp t = -t_total + 1; t <= 0; ++t) {
    const int32_t v = scan_vertex(t, g.n);
    ++gen;
    for (int32_t u : g.adj(v)) stamp[sigma[u]] = gen;
    int32_t c;
    do {
      c = static_cast<int32_t>(rng.uniform_below(static_cast<uint64_t>(q)));
    } while (stamp[c] == gen);
    sigma[v] = c;
  }
  (void)col;
  return sigma;
}

double tv_distance(const ExactDistribution& dist, const Histogram& hist) {
  const double n = static_cast<double>(hist.total);
  double acc = 0.0;
  uint64_t matched = 0;
  for (size_t i = 0; i < dist.support.size(); ++i) {
    uint64_t code = dist.code(dist.support[i]);
    auto it = hist.counts.find(code);
    uint64_t c = it == hist.counts.end() ? 0 : it->second;
    matched += c;
    acc += std::abs(dist.probs[i] - static_cast<double>(c) / n);
  }
  acc += static_cast<double>(hist.total - matched) / n;  // mass outside the support
  return 0.5 * acc;
}

namespace {

// Regularized lower incomplete gamma by series expansion (x < a + 1).
double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int i = 0; i < 100000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma by continued fraction (x >= a + 1).
double gamma_q_cf(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 100000; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

ChiSquareResult chi_square_test(std::span<const double> expected,
                                std::span<const uint64_t> observed) {
  if (expected.size() != observed.size())
    throw std::invalid_argument("chi_square_test: size mismatch");
  double pooled_exp = 0.0;
  uint64_t pooled_obs = 0;
  double stat = 0.0;
  int64_t cells = 0;
  for (size_t i = 0; i < expected.size(); ++i) {
    if (expected[i] < 5.0) {
      pooled_exp += expected[i];
      pooled_obs += observed[i];
      continue;
    }
    double d = static_cast<double>(observed[i]) - expected[i];
    stat += d * d / expected[i];
    ++cells;
  }
  if (pooled_exp > 0.0) {
    double d = static_cast<double>(pooled_obs) - pooled_exp;
    stat += d * d / pooled_exp;
    ++cells;
  }
  if (cells < 2) throw std::invalid_argument("chi_square_test: fewer than two usable cells");
  ChiSquareResult r;
  r.statistic = stat;
  r.df = cells - 1;
  r.cells_after_pooling = cells;
  r.p_value = gamma_q(0.5 * static_cast<double>(r.df), 0.5 * stat);
  return r;
}

GofResult goodness_of_fit(const ExactDistribution& dist, const Histogram& hist) {
  GofResult out;
  out.tv = tv_distance(dist, hist);
  std::vector<double> expected(dist.support.size());
  std::vector<uint64_t> observed(dist.support.size(), 0);
  uint64_t matched = 0;
  for (size_t i = 0; i < dist.support.size(); ++i) {
    expected[i] = dist.probs[i] * static_cast<double>(hist.total);
    auto it = hist.counts.find(dist.code(dist.support[i]));
    if (it != hist.counts.end()) {
      observed[i] = it->second;
      matched += it->second;
    }
  }
  out.outside_support = hist.total - matched;
  if (out.outside_support > 0) {
    out.chi.statistic = std::numeric_limits<double>::infinity();
    out.chi.p_value = 0.0;
    out.chi.df = static_cast<int64_t>(dist.support.size());
    return out;
  }
  out.chi = chi_square_test(expected, observed);
  return out;
}

}  // namespace cttp
