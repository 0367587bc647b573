// Command-line surface: sampling, verification against exact oracles,
// conditional-marginal inference, instance generation, and cost benchmarks.
// One record per line on stdout (JSONL by default, TSV on request),
// diagnostics on stderr. Exit codes: 0 success, 1 usage, 2 validation,
// 3 statistical-test failure, 4 budget abort.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "cttp/coloring_engine.hpp"
#include "cttp/inference.hpp"
#include "cttp/instance.hpp"
#include "cttp/oracle.hpp"
#include "cttp/soft_engine.hpp"

namespace {

using cttp::BudgetAbort;
using cttp::ColoringPolicy;
using cttp::CostStats;
using cttp::Instance;
using cttp::ModelError;
using cttp::ParseError;
using cttp::PinTable;
using json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open instance file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<int32_t> parse_id_list(const std::string& text) {
  std::vector<int32_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw std::invalid_argument("empty id list");
  return out;
}

PinTable parse_pins(const std::string& text, int32_t n) {
  PinTable pins(n, -1);
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("pin must look like vertex=value");
    int32_t v = std::stoi(tok.substr(0, eq));
    int32_t val = std::stoi(tok.substr(eq + 1));
    if (v < 0 || v >= n) throw std::invalid_argument("pin vertex out of range");
    pins[v] = val;
  }
  return pins;
}

void emit_records(const std::vector<json>& records, const std::string& format) {
  if (format == "jsonl") {
    for (const auto& r : records) std::cout << r.dump() << "\n";
    return;
  }
  // tsv: columns from the first record, nested values JSON-encoded
  if (records.empty()) return;
  bool first = true;
  for (auto it = records[0].begin(); it != records[0].end(); ++it) {
    std::cout << (first ? "" : "\t") << it.key();
    first = false;
  }
  std::cout << "\n";
  for (const auto& r : records) {
    first = true;
    for (auto it = r.begin(); it != r.end(); ++it) {
      std::cout << (first ? "" : "\t");
      first = false;
      if (it->is_string())
        std::cout << it->get<std::string>();
      else
        std::cout << it->dump();
    }
    std::cout << "\n";
  }
}

uint64_t budget_from_env() {
  if (const char* s = std::getenv("CTTP_BUDGET")) return std::strtoull(s, nullptr, 10);
  return 1'000'000'000;
}

// Worker pool over replica indices; `fn(state, i)` runs with worker-local
// state and results must be written to index i only, so output order is
// independent of scheduling.
template <typename MakeState, typename Fn>
void parallel_replicas(int64_t count, int jobs, MakeState make_state, Fn fn) {
  if (jobs <= 1) {
    auto state = make_state();
    for (int64_t i = 0; i < count; ++i) fn(*state, i);
    return;
  }
  std::atomic<int64_t> next{0};
  auto worker = [&] {
    auto state = make_state();
    for (int64_t i; (i = next.fetch_add(1)) < count;) fn(*state, i);
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

// Engine-agnostic session handle for the sampling subcommands.
struct AnySession {
  std::unique_ptr<cttp::SoftSession> soft;
  std::unique_ptr<cttp::ColoringSession> coloring;

  void reset(uint64_t stream) { soft ? soft->reset(stream) : coloring->reset(stream); }
  std::vector<int32_t> sample(std::span<const int32_t> q) {
    return soft ? soft->local_sample(q) : coloring->local_sample(q);
  }
  CostStats stats() { return soft ? soft->stats() : coloring->stats(); }
};

struct SessionOptions {
  uint64_t seed = 0;
  uint64_t budget = 1'000'000'000;
  bool break_early = false;
  bool permissive = false;
  bool force = false;
};

std::unique_ptr<AnySession> make_session(const Instance& inst, const SessionOptions& so) {
  auto s = std::make_unique<AnySession>();
  if (const auto* sys = std::get_if<cttp::SpinSystem>(&inst)) {
    cttp::SoftConfig cfg;
    cfg.break_early = so.break_early;
    cfg.force = so.force;
    cfg.budget = so.budget;
    s->soft = std::make_unique<cttp::SoftSession>(*sys, so.seed, 0, cfg);
  } else {
    cttp::ColoringSessionConfig cfg;
    cfg.policy = so.permissive ? ColoringPolicy::permissive : ColoringPolicy::strict;
    cfg.force = so.force;
    cfg.budget = so.budget;
    s->coloring = std::make_unique<cttp::ColoringSession>(std::get<cttp::ColoringInstance>(inst),
                                                          so.seed, 0, cfg);
  }
  return s;
}

json stats_record(const CostStats& st) {
  return json{{"resolve_calls", st.resolve_calls},
              {"check_calls", st.check_calls},
              {"evaluate_iterations", st.evaluate_iterations},
              {"coin_flips", st.coin_flips},
              {"rng_draws", st.rng_draws}};
}

uint64_t config_code(std::span<const int32_t> values, int32_t q) {
  uint64_t code = 0;
  for (size_t i = values.size(); i-- > 0;) code = code * static_cast<uint64_t>(q) + values[i];
  return code;
}

// ---------------------------------------------------------------- sample --

struct SampleArgs {
  std::string instance_path, query_text, session_mode = "fresh", format = "jsonl";
  int64_t reps = 1;
  uint64_t seed = 0;
  int jobs = 1;
  bool break_early = false, permissive = false, force = false;
};

int run_sample(const SampleArgs& a) {
  Instance inst = cttp::load_instance(read_file(a.instance_path));
  auto query = parse_id_list(a.query_text);
  SessionOptions so{a.seed, budget_from_env(), a.break_early, a.permissive, a.force};

  struct Row {
    std::vector<int32_t> values;
    CostStats stats;
  };
  std::vector<Row> rows(static_cast<size_t>(a.reps));

  if (a.session_mode == "shared") {
    auto s = make_session(inst, so);
    CostStats prev{};
    for (int64_t i = 0; i < a.reps; ++i) {
      rows[i].values = s->sample(query);
      CostStats now = s->stats();
      rows[i].stats = {now.resolve_calls - prev.resolve_calls, now.check_calls - prev.check_calls,
                       now.evaluate_iterations - prev.evaluate_iterations,
                       now.coin_flips - prev.coin_flips, now.rng_draws - prev.rng_draws};
      prev = now;
    }
  } else {
    parallel_replicas(
        a.reps, a.jobs, [&] { return make_session(inst, so); },
        [&](AnySession& s, int64_t i) {
          s.reset(static_cast<uint64_t>(i));
          rows[i].values = s.sample(query);
          rows[i].stats = s.stats();
        });
  }

  std::vector<json> records;
  records.reserve(rows.size());
  for (int64_t i = 0; i < a.reps; ++i) {
    json rec{{"rep", i}, {"query", query}, {"values", rows[i].values}};
    rec.update(stats_record(rows[i].stats));
    records.push_back(std::move(rec));
  }
  emit_records(records, a.format);
  return 0;
}

// ---------------------------------------------------------------- verify --

struct VerifyArgs {
  std::string instance_path, query_text, oracle = "enumerate", format = "jsonl";
  int64_t reps = 100000;
  double alpha = 1e-3;
  double tv_max = -1.0;  // <0: report only
  int64_t burn_scans = 3000;
  uint64_t seed = 0;
  int jobs = 1;
  bool break_early = false, permissive = false, force = false;
};

int run_verify(const VerifyArgs& a) {
  Instance inst = cttp::load_instance(read_file(a.instance_path));
  auto query = parse_id_list(a.query_text);
  const int32_t q = cttp::instance_q(inst);
  SessionOptions so{a.seed, budget_from_env(), a.break_early, a.permissive, a.force};

  std::vector<uint64_t> codes(static_cast<size_t>(a.reps));
  parallel_replicas(
      a.reps, a.jobs, [&] { return make_session(inst, so); },
      [&](AnySession& s, int64_t i) {
        s.reset(static_cast<uint64_t>(i));
        codes[i] = config_code(s.sample(query), q);
      });
  cttp::Histogram hist;
  for (uint64_t c : codes) hist.add(c);

  json rec{{"oracle", a.oracle}, {"query", query}, {"reps", a.reps}};
  bool pass = true;
  if (a.oracle == "enumerate") {
    auto dist = cttp::exact_marginal(cttp::enumerate_gibbs(inst), query);
    auto gof = cttp::goodness_of_fit(dist, hist);
    pass = gof.chi.p_value >= a.alpha && gof.outside_support == 0 &&
           (a.tv_max < 0.0 || gof.tv <= a.tv_max);
    rec["tv"] = gof.tv;
    rec["chi2"] = gof.chi.statistic;
    rec["df"] = gof.chi.df;
    rec["p_value"] = gof.chi.p_value;
    rec["outside_support"] = gof.outside_support;
    rec["alpha"] = a.alpha;
  } else if (a.oracle == "forward") {
    // Two-sample comparison: the chi-square path needs exact expectations,
    // so the forward oracle reports TV between the empirical laws only.
    const auto& g = cttp::instance_graph(inst);
    auto initial = cttp::initial_config(inst);
    const int64_t updates = a.burn_scans * g.n;
    std::vector<uint64_t> fcodes(static_cast<size_t>(a.reps));
    struct FwState {
      cttp::RandomStream rng;
    };
    parallel_replicas(
        a.reps, a.jobs, [&] { return std::make_unique<FwState>(); },
        [&](FwState& st, int64_t i) {
          st.rng.reseed(a.seed, (uint64_t{1} << 32) + static_cast<uint64_t>(i));
          auto cfg = cttp::forward_glauber(inst, updates, st.rng, initial);
          std::vector<int32_t> vals;
          vals.reserve(query.size());
          for (int32_t v : query) vals.push_back(cfg[v]);
          fcodes[i] = config_code(vals, q);
        });
    cttp::Histogram fhist;
    for (uint64_t c : fcodes) fhist.add(c);
    double acc = 0.0;
    const double n1 = static_cast<double>(hist.total), n2 = static_cast<double>(fhist.total);
    for (const auto& [code, cnt] : hist.counts) {
      auto it = fhist.counts.find(code);
      const double p2 = it == fhist.counts.end() ? 0.0 : static_cast<double>(it->second) / n2;
      acc += std::abs(static_cast<double>(cnt) / n1 - p2);
    }
    for (const auto& [code, cnt] : fhist.counts)
      if (!hist.counts.contains(code)) acc += static_cast<double>(cnt) / n2;
    const double tv = 0.5 * acc;
    pass = a.tv_max < 0.0 || tv <= a.tv_max;
    rec["tv"] = tv;
    rec["burn_scans"] = a.burn_scans;
  } else {
    throw std::invalid_argument("oracle must be enumerate or forward");
  }
  if (a.tv_max >= 0.0) rec["tv_max"] = a.tv_max;
  rec["pass"] = pass;
  emit_records({rec}, a.format);
  return pass ? 0 : 3;
}

// ----------------------------------------------------------------- infer --

struct InferArgs {
  std::string instance_path, pin_text, format = "jsonl";
  int32_t target = 0;
  double eps = 0.1, delta = 0.1;
  uint64_t seed = 0;
  int jobs = 1;
  bool permissive = false;
};

int run_infer(const InferArgs& a) {
  Instance inst = cttp::load_instance(read_file(a.instance_path));
  const auto& g = cttp::instance_graph(inst);
  PinTable pins = parse_pins(a.pin_text, g.n);
  cttp::InferenceOptions opts;
  opts.seed = a.seed;
  opts.jobs = a.jobs;
  opts.policy = a.permissive ? ColoringPolicy::permissive : ColoringPolicy::strict;
  opts.budget = budget_from_env();
  auto est = cttp::estimate_conditional_marginal(inst, pins, a.target, a.eps, a.delta, opts);
  json rec{{"target", est.target},     {"eps", est.eps},
           {"delta", est.delta},       {"estimates", est.estimates},
           {"batches", est.batches},   {"batch_size", est.batch_size},
           {"samples_used", est.samples_used}, {"truncations", est.truncations}};
  emit_records({rec}, a.format);
  return 0;
}

// ------------------------------------------------------------------- gen --

struct GenArgs {
  std::string family = "path", model = "ising";
  int32_t n = 10, d = 0, q = 0;
  double beta = 1.0;
  uint64_t seed = 0;
};

int run_gen(const GenArgs& a) {
  cttp::Graph g = cttp::gen_graph(a.family, a.n, a.d, a.seed);
  json doc;
  if (a.model == "ising") {
    doc["model"] = "ising";
    doc["beta"] = a.beta;
    auto fields = json::array();
    for (int32_t v = 0; v < g.n; ++v) fields.push_back({0.5, 0.5});
    doc["fields"] = std::move(fields);
    auto edges = json::array();
    for (auto [u, v] : g.edges()) edges.push_back({u, v});
    doc["edges"] = std::move(edges);
  } else if (a.model == "coloring") {
    if (a.q <= 0) throw std::invalid_argument("gen --model coloring requires --q");
    std::vector<std::string> warnings;
    auto inst = cttp::build_coloring(std::move(g), a.q, ColoringPolicy::permissive, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    std::cout << cttp::serialize_instance(Instance{std::move(inst)}) << "\n";
    return 0;
  } else if (a.model == "spin") {
    if (a.q <= 0) throw std::invalid_argument("gen --model spin requires --q");
    auto sys = cttp::build_potts(std::move(g), a.q, a.beta);
    std::cout << cttp::serialize_instance(Instance{std::move(sys)}) << "\n";
    return 0;
  } else {
    throw std::invalid_argument("gen model must be ising, coloring, or spin");
  }
  std::cout << doc.dump() << "\n";
  return 0;
}

// ------------------------------------------------------------------ bench --

struct BenchArgs {
  std::string family = "cycle", model = "ising", sizes_text, format = "jsonl";
  int32_t d = 0, q = 130;
  double beta = 0.9;
  int64_t queries = 1, reps = 1000;
  uint64_t seed = 0;
  int jobs = 1;
  bool permissive = false;
};

int run_bench(const BenchArgs& a) {
  auto sizes = parse_id_list(a.sizes_text);
  std::vector<json> records;
  for (int32_t n : sizes) {
    auto t0 = std::chrono::steady_clock::now();
    cttp::Graph g = cttp::gen_graph(a.family, n, a.d, a.seed);
    Instance inst;
    if (a.model == "ising") {
      std::vector<std::pair<double, double>> fields(g.n, {0.5, 0.5});
      inst = cttp::build_ising(std::move(g), a.beta, fields);
    } else if (a.model == "coloring") {
      inst = cttp::build_coloring(std::move(g), a.q,
                                  a.permissive ? ColoringPolicy::permissive : ColoringPolicy::strict);
    } else if (a.model == "spin") {
      inst = cttp::build_potts(std::move(g), a.q, a.beta);
    } else {
      throw std::invalid_argument("bench model must be ising, coloring, or spin");
    }
    SessionOptions so{a.seed, budget_from_env(), false, a.permissive, false};
    const int32_t nn = cttp::instance_graph(inst).n;

    std::vector<CostStats> per_rep(static_cast<size_t>(a.reps));
    parallel_replicas(
        a.reps, a.jobs, [&] { return make_session(inst, so); },
        [&](AnySession& s, int64_t i) {
          s.reset(static_cast<uint64_t>(i));
          cttp::RandomStream pick(a.seed, (uint64_t{1} << 33) + static_cast<uint64_t>(i));
          for (int64_t k = 0; k < a.queries; ++k) {
            int32_t v = static_cast<int32_t>(pick.uniform_below(static_cast<uint64_t>(nn)));
            s.sample(std::span<const int32_t>(&v, 1));
          }
          per_rep[i] = s.stats();
        });

    CostStats total{};
    for (const auto& st : per_rep) {
      total.resolve_calls += st.resolve_calls;
      total.check_calls += st.check_calls;
      total.evaluate_iterations += st.evaluate_iterations;
      total.coin_flips += st.coin_flips;
      total.rng_draws += st.rng_draws;
    }
    const double queries_total = static_cast<double>(a.reps * a.queries);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    records.push_back(json{
        {"n", n},
        {"model", a.model},
        {"queries", a.reps * a.queries},
        {"mean_resolve_calls", static_cast<double>(total.resolve_calls) / queries_total},
        {"mean_check_calls", static_cast<double>(total.check_calls) / queries_total},
        {"mean_evaluate_iterations",
         static_cast<double>(total.evaluate_iterations) / queries_total},
        {"mean_coin_flips", static_cast<double>(total.coin_flips) / queries_total},
        {"mean_rng_draws", static_cast<double>(total.rng_draws) / queries_total},
        {"wall_ms", ms}});
  }
  emit_records(records, a.format);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perfect local samplers for Gibbs distributions of spin systems"};
  app.require_subcommand(1);
  std::function<int()> runner;

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "draw local samples");
  sample->add_option("--instance", sa.instance_path)->required();
  sample->add_option("--query", sa.query_text)->required();
  sample->add_option("--reps", sa.reps);
  sample->add_option("--seed", sa.seed);
  sample->add_option("--jobs", sa.jobs);
  sample->add_option("--session", sa.session_mode)->check(CLI::IsMember({"fresh", "shared"}));
  sample->add_option("--format", sa.format)->check(CLI::IsMember({"jsonl", "tsv"}));
  sample->add_flag("--break-early", sa.break_early);
  sample->add_flag("--permissive", sa.permissive);
  sample->add_flag("--force", sa.force);
  sample->callback([&] { runner = [&] { return run_sample(sa); }; });

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "compare sampler output against an oracle");
  verify->add_option("--instance", va.instance_path)->required();
  verify->add_option("--query", va.query_text)->required();
  verify->add_option("--reps", va.reps);
  verify->add_option("--alpha", va.alpha);
  verify->add_option("--tv-max", va.tv_max);
  verify->add_option("--oracle", va.oracle)->check(CLI::IsMember({"enumerate", "forward"}));
  verify->add_option("--burn", va.burn_scans);
  verify->add_option("--seed", va.seed);
  verify->add_option("--jobs", va.jobs);
  verify->add_option("--format", va.format)->check(CLI::IsMember({"jsonl", "tsv"}));
  verify->add_flag("--break-early", va.break_early);
  verify->add_flag("--permissive", va.permissive);
  verify->add_flag("--force", va.force);
  verify->callback([&] { runner = [&] { return run_verify(va); }; });

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "estimate a conditional marginal");
  infer->add_option("--instance", ia.instance_path)->required();
  infer->add_option("--pin", ia.pin_text)->required();
  infer->add_option("--target", ia.target)->required();
  infer->add_option("--eps", ia.eps);
  infer->add_option("--delta", ia.delta);
  infer->add_option("--seed", ia.seed);
  infer->add_option("--jobs", ia.jobs);
  infer->add_option("--format", ia.format)->check(CLI::IsMember({"jsonl", "tsv"}));
  infer->add_flag("--permissive", ia.permissive);
  infer->callback([&] { runner = [&] { return run_infer(ia); }; });

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "emit an instance document");
  gen->add_option("--family", ga.family)
      ->check(CLI::IsMember({"path", "cycle", "star", "grid", "random_regular"}));
  gen->add_option("--n", ga.n)->required();
  gen->add_option("--d", ga.d);
  gen->add_option("--model", ga.model)->check(CLI::IsMember({"ising", "coloring", "spin"}));
  gen->add_option("--beta", ga.beta);
  gen->add_option("--q", ga.q);
  gen->add_option("--seed", ga.seed);
  gen->callback([&] { runner = [&] { return run_gen(ga); }; });

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "cost-per-query sweep over instance sizes");
  bench->add_option("--family", ba.family);
  bench->add_option("--model", ba.model);
  bench->add_option("--sizes", ba.sizes_text)->required();
  bench->add_option("--queries", ba.queries);
  bench->add_option("--reps", ba.reps);
  bench->add_option("--beta", ba.beta);
  bench->add_option("--q", ba.q);
  bench->add_option("--d", ba.d);
  bench->add_option("--seed", ba.seed);
  bench->add_option("--jobs", ba.jobs);
  bench->add_option("--format", ba.format)->check(CLI::IsMember({"jsonl", "tsv"}));
  bench->add_flag("--permissive", ba.permissive);
  bench->callback([&] { runner = [&] { return run_bench(ba); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    return runner();
  } catch (const BudgetAbort& e) {
    std::cerr << "budget abort: " << e.what() << "\n";
    return 4;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
