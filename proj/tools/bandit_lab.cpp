// bandit-lab: run contextual-bandit experiments, grid-search hyperparameters
// and compare policies on deterministic seeded environments.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "banditlab/harness.hpp"

namespace {

using banditlab::ParamMap;
using banditlab::RunConfig;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string::npos ? pos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("value for '" + key + "' is not a number: '" + value + "'");
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split(csv, ',')) {
    if (part.empty()) throw std::runtime_error("empty seed in --seeds");
    try {
      seeds.push_back(std::stoull(part));
    } catch (const std::exception&) {
      throw std::runtime_error("seed '" + part + "' is not an unsigned integer");
    }
  }
  return seeds;
}

struct CommonArgs {
  std::string env;
  std::string rounds;
  std::string seeds;
  std::string out;
  std::string config_path;
  int threads = 0;
  std::vector<std::string> sets;

  CLI::Option* env_opt = nullptr;
  CLI::Option* rounds_opt = nullptr;
  CLI::Option* seeds_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  args.env_opt = cmd->add_option("--env", args.env,
                                 "environment: synthetic-{linear,quadratic,cosine} or "
                                 "csv:PATH[:LABELCOL]");
  args.rounds_opt = cmd->add_option("--rounds", args.rounds, "horizon T");
  args.seeds_opt = cmd->add_option("--seeds", args.seeds, "comma-separated seed list");
  args.out_opt = cmd->add_option("--out", args.out, "output directory");
  args.threads_opt = cmd->add_option("--threads", args.threads, "worker threads (0 = auto)");
  cmd->add_option("--set", args.sets, "hyperparameter override key=value (repeatable)");
  cmd->add_option("--config", args.config_path,
                  "flat key = value config file; CLI flags and --set override it");
}

// Merge order: built-in defaults, then config file, then CLI flags / --set.
RunConfig build_config(const CommonArgs& args, const std::string& algo_name,
                       bool validate = true) {
  RunConfig cfg;
  std::map<std::string, std::string> file;
  if (!args.config_path.empty()) file = banditlab::parse_config_file(args.config_path);

  auto take = [&](const char* key, const CLI::Option* opt,
                  const std::string& cli_value) -> std::string {
    if (opt && opt->count() > 0) {
      file.erase(key);
      return cli_value;
    }
    auto it = file.find(key);
    if (it == file.end()) return {};
    std::string v = it->second;
    file.erase(it);
    return v;
  };

  std::string algo = algo_name;
  if (algo.empty()) {
    auto it = file.find("algo");
    if (it != file.end()) algo = it->second;
  }
  file.erase("algo");
  if (algo.empty()) throw std::runtime_error("no algorithm given (--algo or config 'algo')");
  cfg.algo = banditlab::algo_from_string(algo);

  const std::string env = take("env", args.env_opt, args.env);
  if (env.empty()) throw std::runtime_error("no environment given (--env or config 'env')");
  cfg.env = env;

  const std::string rounds = take("rounds", args.rounds_opt, args.rounds);
  if (!rounds.empty()) cfg.rounds = static_cast<std::int64_t>(parse_double("rounds", rounds));

  const std::string seeds = take("seeds", args.seeds_opt, args.seeds);
  if (!seeds.empty()) cfg.seeds = parse_seeds(seeds);

  cfg.out_dir = take("out", args.out_opt, args.out);

  const std::string threads =
      take("threads", args.threads_opt, std::to_string(args.threads));
  if (!threads.empty()) cfg.threads = static_cast<int>(parse_double("threads", threads));

  // remaining config-file keys are hyperparameters
  for (const auto& [key, value] : file) cfg.params[key] = parse_double(key, value);
  for (const auto& kv : args.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got '" + kv + "'");
    cfg.params[kv.substr(0, eq)] = parse_double(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (validate) banditlab::validate_config(cfg);
  return cfg;
}

void print_summary(const banditlab::Summary& summary) {
  for (const auto& s : summary.per_algorithm)
    std::printf("%s: seeds=%d mean_final_regret=%.4f std_final_regret=%.4f\n",
                s.algorithm.c_str(), s.seed_count, s.mean_final, s.std_final);
}

int cmd_run(const CommonArgs& args, const std::string& algo) {
  RunConfig cfg = build_config(args, algo);
  if (cfg.out_dir.empty()) throw std::runtime_error("run: --out is required");
  const auto traces = banditlab::run(cfg);
  const auto summary = banditlab::summarize(traces);
  banditlab::write_outputs(traces, summary, cfg.out_dir);
  print_summary(summary);
  std::printf("wrote %zu trace files + summary.csv + curves.csv + plot_curves.gp under %s\n",
              traces.size(), cfg.out_dir.c_str());
  return 0;
}

int cmd_grid(const CommonArgs& args, const std::string& algo,
             const std::vector<std::string>& grid_specs) {
  RunConfig cfg = build_config(args, algo);
  if (grid_specs.empty()) throw std::runtime_error("grid: at least one --grid key=v1,v2 required");
  std::map<std::string, std::vector<double>> grid;
  for (const auto& spec : grid_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--grid expects key=v1,v2,..., got '" + spec + "'");
    const std::string key = spec.substr(0, eq);
    std::vector<double> values;
    for (const auto& v : split(spec.substr(eq + 1), ','))
      values.push_back(parse_double(key, v));
    grid[key] = values;
  }

  const auto result = banditlab::grid_search(cfg, grid);
  for (const auto& point : result.evaluated) {
    std::string desc;
    for (const auto& [k, v] : point.params)
      desc += k + "=" + banditlab::detail::fmt_double(v) + " ";
    std::printf("grid %smean_final_regret=%.4f\n", desc.c_str(), point.mean_final);
  }
  std::string best;
  for (const auto& [k, v] : result.best) best += k + "=" + banditlab::detail::fmt_double(v) + " ";
  std::printf("best: %smean_final_regret=%.4f\n", best.c_str(), result.best_mean_final);

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const fs::path path = fs::path(cfg.out_dir) / "grid_results.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    bool first = true;
    for (const auto& [k, _] : grid) {
      out << (first ? "" : ",") << k;
      first = false;
    }
    out << ",mean_final_regret\n";
    for (const auto& point : result.evaluated) {
      first = true;
      for (const auto& [k, _] : grid) {
        out << (first ? "" : ",") << banditlab::detail::fmt_double(point.params.at(k));
        first = false;
      }
      out << ',' << banditlab::detail::fmt_double(point.mean_final) << '\n';
    }
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

int cmd_compare(const CommonArgs& args, const std::string& algos_csv) {
  if (algos_csv.empty()) throw std::runtime_error("compare: --algos is required");
  const auto names = split(algos_csv, ',');

  // A shared --set may carry keys for several algorithms; each run keeps the
  // keys its algorithm understands, and a key nobody understands is an error.
  std::vector<RunConfig> configs;
  std::set<std::string> accepted;
  for (const auto& name : names) {
    RunConfig cfg = build_config(args, name, /*validate=*/false);
    if (cfg.out_dir.empty()) throw std::runtime_error("compare: --out is required");
    ParamMap filtered;
    for (const auto& [key, value] : cfg.params) {
      RunConfig probe = cfg;
      probe.params = {{key, value}};
      try {
        banditlab::validate_config(probe);
        filtered[key] = value;
        accepted.insert(key);
      } catch (const std::invalid_argument&) {
        // key belongs to another algorithm in the list
      }
    }
    cfg.params = std::move(filtered);
    banditlab::validate_config(cfg);
    configs.push_back(std::move(cfg));
  }
  if (!configs.empty())
    for (const auto& [key, _] : build_config(args, names.front(), false).params)
      if (!accepted.count(key))
        throw std::runtime_error("hyperparameter '" + key +
                                 "' is not understood by any algorithm in --algos");

  std::vector<banditlab::RegretTrace> all;
  std::string out_dir;
  for (const auto& cfg : configs) {
    out_dir = cfg.out_dir;
    auto traces = banditlab::run(cfg);
    for (auto& t : traces) all.push_back(std::move(t));
  }
  const auto summary = banditlab::summarize(all);
  banditlab::write_outputs(all, summary, out_dir);
  print_summary(summary);
  std::printf("wrote %zu trace files + summary.csv + curves.csv + plot_curves.gp under %s\n",
              all.size(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contextual-bandit experiment lab"};
  app.require_subcommand(1);

  CommonArgs run_args, grid_args, cmp_args;
  std::string run_algo, grid_algo, cmp_algos;
  std::vector<std::string> grid_specs;

  auto* run_cmd = app.add_subcommand("run", "run one algorithm, write regret traces");
  run_cmd->add_option("--algo", run_algo, "algorithm name");
  add_common(run_cmd, run_args);

  auto* grid_cmd = app.add_subcommand("grid", "exhaustive hyperparameter grid search");
  grid_cmd->add_option("--algo", grid_algo, "algorithm name");
  grid_cmd->add_option("--grid", grid_specs, "grid values key=v1,v2,... (repeatable)");
  add_common(grid_cmd, grid_args);

  auto* cmp_cmd = app.add_subcommand("compare", "run several algorithms on one environment");
  cmp_cmd->add_option("--algos", cmp_algos, "comma-separated algorithm names");
  add_common(cmp_cmd, cmp_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_args, run_algo);
    if (grid_cmd->parsed()) return cmd_grid(grid_args, grid_algo, grid_specs);
    if (cmp_cmd->parsed()) return cmd_compare(cmp_args, cmp_algos);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
