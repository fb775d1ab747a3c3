#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "banditlab/baselines.hpp"
#include "banditlab/eenet.hpp"
#include "banditlab/env.hpp"
#include "banditlab/policy.hpp"

namespace banditlab {

enum class Algo {
  eenet,
  eenet_abs,
  eenet_relu,
  linucb,
  kernelucb,
  neural_epsilon,
  neuralucb,
  neuralts,
  oracle,
  random_pick,
};

inline const std::vector<std::pair<std::string, Algo>>& algo_names() {
  static const std::vector<std::pair<std::string, Algo>> names = {
      {"eenet", Algo::eenet},
      {"eenet-abs", Algo::eenet_abs},
      {"eenet-relu", Algo::eenet_relu},
      {"linucb", Algo::linucb},
      {"kernelucb", Algo::kernelucb},
      {"neural-epsilon", Algo::neural_epsilon},
      {"neuralucb", Algo::neuralucb},
      {"neuralts", Algo::neuralts},
      {"oracle", Algo::oracle},
      {"random", Algo::random_pick},
  };
  return names;
}

inline std::string to_string(Algo a) {
  for (const auto& [name, algo] : algo_names())
    if (algo == a) return name;
  return "?";
}

inline Algo algo_from_string(const std::string& s) {
  for (const auto& [name, algo] : algo_names())
    if (name == s) return algo;
  std::string known;
  for (const auto& [name, _] : algo_names()) known += (known.empty() ? "" : ", ") + name;
  throw std::invalid_argument("unknown algorithm '" + s + "' (known: " + known + ")");
}

using ParamMap = std::map<std::string, double>;

struct RunConfig {
  Algo algo = Algo::eenet;
  std::string env;  // synthetic-{linear,quadratic,cosine} or csv:PATH[:LABELCOL]
  std::int64_t rounds = 5000;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  ParamMap params;
  std::string out_dir;
  int threads = 0;  // 0 = one per seed up to hardware concurrency
};

struct RegretTrace {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::vector<double> cumulative;  // nondecreasing, increments in [0,1]
  double wall_time_ms = 0.0;

  double final_regret() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

struct AlgoSummary {
  std::string algorithm;
  int seed_count = 0;
  double mean_final = 0.0;
  double std_final = 0.0;  // sample std; 0 for a single seed
  std::vector<double> mean_curve;
};

struct Summary {
  std::vector<AlgoSummary> per_algorithm;
};

// ---------------------------------------------------------------------------
// Config validation

namespace detail {

inline const std::set<std::string>& env_keys_synthetic() {
  static const std::set<std::string> keys = {"dim", "arms", "noise_sigma", "noise_bernoulli"};
  return keys;
}

inline const std::set<std::string>& env_keys_csv() {
  static const std::set<std::string> keys = {"dim", "arms"};
  return keys;
}

inline const std::set<std::string>& algo_keys(Algo a) {
  static const std::set<std::string> eenet = {"lr1", "lr2", "width", "depth",
                                              "proj_dim", "replay", "replay_size"};
  static const std::set<std::string> linucb = {"alpha", "lambda"};
  static const std::set<std::string> kernelucb = {"nu", "lambda", "lengthscale"};
  static const std::set<std::string> neps = {"epsilon", "lr", "width", "depth"};
  static const std::set<std::string> nucb = {"nu", "lambda", "lr", "width", "depth"};
  static const std::set<std::string> none = {};
  switch (a) {
    case Algo::eenet:
    case Algo::eenet_abs:
    case Algo::eenet_relu: return eenet;
    case Algo::linucb: return linucb;
    case Algo::kernelucb: return kernelucb;
    case Algo::neural_epsilon: return neps;
    case Algo::neuralucb:
    case Algo::neuralts: return nucb;
    default: return none;
  }
}

inline double get_or(const ParamMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

inline int get_int(const ParamMap& params, const std::string& key, int fallback) {
  const double v = get_or(params, key, static_cast<double>(fallback));
  const int i = static_cast<int>(std::llround(v));
  if (std::abs(v - i) > 1e-9)
    throw std::invalid_argument("parameter '" + key + "' must be an integer");
  return i;
}

}  // namespace detail

struct EnvName {
  bool is_csv = false;
  EnvKind kind = EnvKind::synthetic_quadratic;
  std::string csv_path;
  std::string label_column = "label";
};

inline EnvName parse_env_name(const std::string& env) {
  EnvName out;
  if (env.rfind("csv:", 0) == 0) {
    out.is_csv = true;
    out.kind = EnvKind::classification;
    const std::string rest = env.substr(4);
    // csv:PATH or csv:PATH:LABELCOL; a trailing segment without '/' names
    // the label column.
    const auto colon = rest.rfind(':');
    if (colon != std::string::npos && colon > 0 &&
        rest.find('/', colon) == std::string::npos) {
      out.csv_path = rest.substr(0, colon);
      out.label_column = rest.substr(colon + 1);
    } else {
      out.csv_path = rest;
    }
    if (out.csv_path.empty()) throw std::invalid_argument("empty csv path in --env");
    return out;
  }
  if (env == "synthetic-linear") out.kind = EnvKind::synthetic_linear;
  else if (env == "synthetic-quadratic") out.kind = EnvKind::synthetic_quadratic;
  else if (env == "synthetic-cosine") out.kind = EnvKind::synthetic_cosine;
  else
    throw std::invalid_argument(
        "unknown environment '" + env +
        "' (known: synthetic-linear, synthetic-quadratic, synthetic-cosine, csv:PATH[:LABELCOL])");
  return out;
}

/// Rejects unknown hyperparameter keys and malformed sizes up front.
inline void validate_config(const RunConfig& cfg) {
  if (cfg.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (cfg.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  const EnvName env = parse_env_name(cfg.env);
  const auto& env_keys =
      env.is_csv ? detail::env_keys_csv() : detail::env_keys_synthetic();
  const auto& keys = detail::algo_keys(cfg.algo);
  for (const auto& [key, value] : cfg.params) {
    if (!keys.count(key) && !env_keys.count(key))
      throw std::invalid_argument("unknown hyperparameter '" + key + "' for algorithm '" +
                                  to_string(cfg.algo) + "' on env '" + cfg.env + "'");
    if (!std::isfinite(value))
      throw std::invalid_argument("hyperparameter '" + key + "' is not finite");
  }
}

// ---------------------------------------------------------------------------
// Factories

inline std::shared_ptr<const ClassificationDataset> load_dataset_for(const EnvName& env) {
  return std::make_shared<const ClassificationDataset>(
      load_csv_dataset(env.csv_path, env.label_column));
}

inline std::unique_ptr<BanditEnv> make_env(
    const EnvName& env, const ParamMap& params, std::uint64_t seed,
    const std::shared_ptr<const ClassificationDataset>& dataset) {
  using detail::get_int;
  using detail::get_or;
  if (env.is_csv) {
    auto e = std::make_unique<ClassificationEnv>(dataset, seed);
    const int dim = get_int(params, "dim", e->dim());
    const int arms = get_int(params, "arms", e->n_arms());
    if (dim != e->dim() || arms != e->n_arms())
      throw std::invalid_argument("policy/environment dimension mismatch: dataset has dim " +
                                  std::to_string(e->dim()) + ", " + std::to_string(e->n_arms()) +
                                  " arms");
    return e;
  }
  EnvSpec spec;
  spec.kind = env.kind;
  spec.dim = get_int(params, "dim", 10);
  spec.n_arms = get_int(params, "arms", 10);
  spec.noise_sigma = get_or(params, "noise_sigma", 0.05);
  if (get_int(params, "noise_bernoulli", 0) != 0) spec.noise = NoiseKind::bernoulli;
  else if (spec.noise_sigma == 0.0) spec.noise = NoiseKind::none;
  else spec.noise = NoiseKind::gaussian;
  spec.seed = seed;
  return std::make_unique<SyntheticEnv>(std::move(spec));
}

inline std::unique_ptr<Policy> make_policy(Algo algo, int dim, std::uint64_t seed,
                                           const ParamMap& params) {
  using detail::get_int;
  using detail::get_or;
  const int width = get_int(params, "width", 100);
  const int depth = get_int(params, "depth", 2);
  switch (algo) {
    case Algo::eenet:
    case Algo::eenet_abs:
    case Algo::eenet_relu: {
      EENetConfig cfg;
      cfg.arm_dim = dim;
      cfg.width = width;
      cfg.depth = depth;
      cfg.lr1 = get_or(params, "lr1", 1e-2);
      cfg.lr2 = get_or(params, "lr2", 1e-2);
      cfg.proj_dim = get_int(params, "proj_dim", 10);
      cfg.variant = algo == Algo::eenet ? LabelVariant::residual
                    : algo == Algo::eenet_abs ? LabelVariant::absolute
                                              : LabelVariant::relu;
      cfg.replay = get_int(params, "replay", 0) != 0;
      cfg.replay_size = get_int(params, "replay_size", 32);
      cfg.seed = seed;
      return std::make_unique<EENetPolicy>(cfg);
    }
    case Algo::linucb:
      return std::make_unique<LinUcbPolicy>(dim, get_or(params, "alpha", 0.1),
                                            get_or(params, "lambda", 1.0));
    case Algo::kernelucb:
      return std::make_unique<KernelUcbPolicy>(dim, get_or(params, "nu", 0.1),
                                               get_or(params, "lambda", 1.0),
                                               get_or(params, "lengthscale", 1.0));
    case Algo::neural_epsilon:
      return std::make_unique<NeuralEpsilonPolicy>(dim, width, depth,
                                                   get_or(params, "epsilon", 0.1),
                                                   get_or(params, "lr", 1e-2), seed);
    case Algo::neuralucb:
      return std::make_unique<NeuralUcbPolicy>(dim, width, depth, get_or(params, "nu", 0.01),
                                               get_or(params, "lambda", 1.0),
                                               get_or(params, "lr", 1e-2), seed);
    case Algo::neuralts:
      return std::make_unique<NeuralTsPolicy>(dim, width, depth, get_or(params, "nu", 0.01),
                                              get_or(params, "lambda", 1.0),
                                              get_or(params, "lr", 1e-2), seed);
    case Algo::oracle: return std::make_unique<OraclePolicy>();
    case Algo::random_pick: return std::make_unique<RandomPolicy>(seed);
  }
  throw std::invalid_argument("unknown algorithm id");
}

// ---------------------------------------------------------------------------
// The online loop

inline RegretTrace run_single(const RunConfig& cfg, std::uint64_t seed,
                              const std::shared_ptr<const ClassificationDataset>& dataset) {
  const auto t0 = std::chrono::steady_clock::now();
  const EnvName env_name = parse_env_name(cfg.env);
  auto env = make_env(env_name, cfg.params, seed, dataset);
  auto policy = make_policy(cfg.algo, env->dim(), seed, cfg.params);

  RegretTrace trace;
  trace.algorithm = to_string(cfg.algo);
  trace.seed = seed;
  trace.cumulative.reserve(cfg.rounds);
  double cum = 0.0;
  for (std::int64_t t = 1; t <= cfg.rounds; ++t) {
    const RoundContext round = env->next_round(t);
    const int chosen = policy->select(round);
    const double realized = env->realize(t, chosen, round.expected_rewards[chosen]);
    policy->update(round.arms[chosen], realized);
    cum += pseudo_regret(round, chosen);
    trace.cumulative.push_back(cum);
  }
  trace.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

/// Runs one (algorithm, environment) configuration over all seeds. Seeds are
/// independent and may run on worker threads; results keep seed order.
inline std::vector<RegretTrace> run(const RunConfig& cfg) {
  validate_config(cfg);
  const EnvName env_name = parse_env_name(cfg.env);
  std::shared_ptr<const ClassificationDataset> dataset;
  if (env_name.is_csv) dataset = load_dataset_for(env_name);

  const int n = static_cast<int>(cfg.seeds.size());
  std::vector<RegretTrace> traces(n);
  int workers = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n));

  if (workers == 1) {
    for (int i = 0; i < n; ++i) traces[i] = run_single(cfg, cfg.seeds[i], dataset);
    return traces;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
          traces[i] = run_single(cfg, cfg.seeds[i], dataset);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return traces;
}

// ---------------------------------------------------------------------------
// Aggregation

inline Summary summarize(const std::vector<RegretTrace>& traces) {
  Summary summary;
  if (traces.empty()) return summary;
  const std::size_t rounds = traces.front().cumulative.size();
  for (const auto& trace : traces)
    if (trace.cumulative.size() != rounds)
      throw std::invalid_argument("summarize: traces have mismatched lengths");

  std::vector<std::string> order;
  std::map<std::string, std::vector<const RegretTrace*>> groups;
  for (const auto& trace : traces) {
    if (!groups.count(trace.algorithm)) order.push_back(trace.algorithm);
    groups[trace.algorithm].push_back(&trace);
  }
  for (const auto& algo : order) {
    const auto& group = groups[algo];
    AlgoSummary s;
    s.algorithm = algo;
    s.seed_count = static_cast<int>(group.size());
    double sum = 0.0;
    for (const auto* t : group) sum += t->final_regret();
    s.mean_final = sum / s.seed_count;
    if (s.seed_count > 1) {
      double ss = 0.0;
      for (const auto* t : group) {
        const double d = t->final_regret() - s.mean_final;
        ss += d * d;
      }
      s.std_final = std::sqrt(ss / (s.seed_count - 1));
    }
    s.mean_curve.assign(rounds, 0.0);
    for (const auto* t : group)
      for (std::size_t i = 0; i < rounds; ++i) s.mean_curve[i] += t->cumulative[i];
    for (auto& v : s.mean_curve) v /= s.seed_count;
    summary.per_algorithm.push_back(std::move(s));
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Grid search

struct GridPoint {
  ParamMap params;
  double mean_final = 0.0;
};

struct GridSearchResult {
  ParamMap best;
  double best_mean_final = 0.0;
  std::vector<GridPoint> evaluated;
};

/// Exhaustive Cartesian product over the grid; lowest mean final cumulative
/// regret wins and ties keep the lexicographically earlier point (keys
/// sorted, values in the given order).
inline GridSearchResult grid_search(const RunConfig& base,
                                    const std::map<std::string, std::vector<double>>& grid) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  for (const auto& [key, values] : grid) {
    if (values.empty())
      throw std::invalid_argument("grid_search: no values for key '" + key + "'");
    RunConfig probe = base;
    probe.params[key] = values.front();
    validate_config(probe);  // rejects unknown grid keys
  }
  validate_config(base);

  std::vector<std::string> keys;
  for (const auto& [key, _] : grid) keys.push_back(key);  // std::map is sorted

  GridSearchResult result;
  std::vector<std::size_t> index(keys.size(), 0);
  bool done = false;
  while (!done) {
    RunConfig cfg = base;
    GridPoint point;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const double v = grid.at(keys[i])[index[i]];
      cfg.params[keys[i]] = v;
      point.params[keys[i]] = v;
    }
    const Summary s = summarize(run(cfg));
    point.mean_final = s.per_algorithm.front().mean_final;
    if (result.evaluated.empty() || point.mean_final < result.best_mean_final) {
      result.best = point.params;
      result.best_mean_final = point.mean_final;
    }
    result.evaluated.push_back(std::move(point));

    // odometer, last key fastest
    done = true;
    for (int i = static_cast<int>(keys.size()) - 1; i >= 0; --i) {
      if (++index[i] < grid.at(keys[i]).size()) {
        done = false;
        break;
      }
      index[i] = 0;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// File outputs

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string trace_filename(const RegretTrace& trace) {
  return "trace_" + trace.algorithm + "_" + std::to_string(trace.seed) + ".csv";
}

/// Writes trace_<algo>_<seed>.csv, summary.csv, curves.csv and a gnuplot
/// script. Partial outputs are removed if any write fails.
inline std::vector<std::filesystem::path> write_outputs(const std::vector<RegretTrace>& traces,
                                                        const Summary& summary,
                                                        const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  std::vector<fs::path> written;
  auto open_out = [&](const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + p.string());
    written.push_back(p);
    return out;
  };
  try {
    fs::create_directories(dir);
    for (const auto& trace : traces) {
      auto out = open_out(dir / trace_filename(trace));
      out << "round,cumulative_regret\n";
      for (std::size_t i = 0; i < trace.cumulative.size(); ++i)
        out << (i + 1) << ',' << detail::fmt_double(trace.cumulative[i]) << '\n';
      if (!out) throw std::runtime_error("write failed: " + trace_filename(trace));
    }
    {
      auto out = open_out(dir / "summary.csv");
      out << "algorithm,seed_count,mean_final_regret,std_final_regret\n";
      for (const auto& s : summary.per_algorithm)
        out << s.algorithm << ',' << s.seed_count << ',' << detail::fmt_double(s.mean_final)
            << ',' << detail::fmt_double(s.std_final) << '\n';
    }
    {
      auto out = open_out(dir / "curves.csv");
      out << "round";
      for (const auto& s : summary.per_algorithm) out << ',' << s.algorithm << "_mean";
      out << '\n';
      const std::size_t rounds =
          summary.per_algorithm.empty() ? 0 : summary.per_algorithm.front().mean_curve.size();
      for (std::size_t i = 0; i < rounds; ++i) {
        out << (i + 1);
        for (const auto& s : summary.per_algorithm)
          out << ',' << detail::fmt_double(s.mean_curve[i]);
        out << '\n';
      }
    }
    {
      auto out = open_out(dir / "plot_curves.gp");
      out << "# gnuplot script; run from the output directory:  gnuplot -p plot_curves.gp\n"
             "set datafile separator \",\"\n"
             "set key autotitle columnhead\n"
             "set xlabel \"round\"\n"
             "set ylabel \"mean cumulative regret\"\n"
             "plot for [i=2:*] \"curves.csv\" using 1:i with lines\n";
    }
  } catch (...) {
    for (const auto& p : written) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
    throw;
  }
  return written;
}

/// Reads back a trace CSV written by write_outputs.
inline std::vector<double> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("round,", 0) != 0)
    throw std::runtime_error("bad trace header in " + path);
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("bad trace row in " + path);
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  return values;
}

// ---------------------------------------------------------------------------
// Flat key=value config files

/// Parses `key = value` lines; '#' starts a comment, blank lines ignored.
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

}  // namespace banditlab
