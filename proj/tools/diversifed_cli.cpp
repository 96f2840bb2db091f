// diversifed: run, partition, toy, check-grad, sweep.
//
// Exit codes: 0 ok, 1 invalid configuration or arguments, 2 runtime failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "diversifed/diversifed.hpp"

using namespace diversifed;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailure = 2;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_reals(const std::string& what, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(what + ": expected a number, got '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

// Options that take a value which may begin with '-' (negative numbers).
// CLI11 would read "-0.1,0" as a flag, so glue such pairs as --opt=value.
std::vector<std::string> glue_values(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--", 0) == 0 && a.find('=') == std::string::npos && i + 1 < argc) {
      const std::string next = argv[i + 1];
      if (next.size() > 1 && next[0] == '-' && (std::isdigit(static_cast<unsigned char>(next[1])) || next[1] == '.')) {
        args.push_back(a + "=" + next);
        ++i;
        continue;
      }
    }
    args.push_back(a);
  }
  return args;
}

// The settings of the small pull/push experiment.
KeyValues toy_settings() {
  return {{"method", "toy_pullpush"},           {"n_clients", "5"},
          {"rounds", "50"},                     {"local_epochs", "5"},
          {"partition.scheme", "pathological"}, {"partition.classes_per_client", "2"},
          {"dataset.feature_dim", "20"},        {"dataset.separation", "3"},
          {"dataset.noise_sigma", "2"}};
}

LoadedConfig load(const std::optional<std::string>& path, const KeyValues& base, const std::vector<std::string>& extra) {
  KeyValues all = base;
  for (auto& kv : overrides_from_args(extra)) all.push_back(std::move(kv));
  return load_config(path, all);
}

void print_report_line(const RunReport& rep) {
  std::printf("method=%s seed=%llu best_mean_accuracy=%.6f best_round=%zu final_mean_accuracy=%.6f wall=%.2fs\n",
              to_string(rep.config.method), static_cast<unsigned long long>(rep.config.seed), rep.best_mean_accuracy,
              rep.best_round, rep.final_mean_accuracy, rep.wall_clock_seconds);
}

RunReport run_with_outputs(const LoadedConfig& cfg, bool quiet) {
  MetricsSink sink(cfg.output.csv);
  auto report = run(cfg.run, [&](const RoundRecord& r) {
    sink.emit_round(r);
    if (!quiet) std::fprintf(stderr, "round %zu mean_acc %.4f\n", r.round, r.mean_accuracy);
  });
  if (!cfg.output.json.empty()) emit_summary(cfg.output.json, report);
  return report;
}

int cmd_run(const std::optional<std::string>& config, const std::vector<std::string>& extra, bool quiet) {
  const auto cfg = load(config, {}, extra);
  print_report_line(run_with_outputs(cfg, quiet));
  return kOk;
}

int cmd_partition(const std::optional<std::string>& config, const std::vector<std::string>& extra,
                  const std::string& out) {
  const auto cfg = load(config, {}, extra);
  const auto ds = build_dataset(cfg.run);
  const auto j = to_json(build_partition(cfg.run, ds)).dump(2);
  if (out.empty() || out == "-") {
    std::cout << j << '\n';
  } else {
    std::ofstream f(out);
    if (!f) throw IoError("cannot open '" + out + "' for writing");
    f << j << '\n';
  }
  return kOk;
}

int cmd_toy(const std::optional<std::string>& config, const std::vector<std::string>& extra,
            const std::string& lambdas_arg, std::size_t seeds) {
  const auto lambdas = parse_reals("lambdas", lambdas_arg);
  if (seeds == 0) throw ConfigError("seeds: must be positive");
  auto cfg = load(config, toy_settings(), extra);
  std::printf("%-10s %-18s %s\n", "lambda", "best_mean_acc(%)", "seeds");
  for (double lam : lambdas) {
    std::vector<double> best;
    for (std::size_t s = 0; s < seeds; ++s) {
      auto run_cfg = cfg.run;
      run_cfg.toy_lambda = lam;
      run_cfg.seed = cfg.run.seed + s;
      best.push_back(run(run_cfg).best_mean_accuracy);
    }
    std::printf("%-10g %-18s %zu\n", lam, format_mean_std(mean_std(best)).c_str(), seeds);
  }
  return kOk;
}

int cmd_check_grad(std::size_t pools, std::size_t instances, std::uint64_t seed) {
  std::vector<SuiteResult> results = weight_identity_suite(pools, seed);
  results.push_back(distance_grad_suite(instances, seed));
  results.push_back(cross_entropy_grad_suite(instances, seed));
  bool ok = true;
  for (const auto& r : results) {
    std::cout << describe(r) << '\n';
    ok = ok && r.passed();
  }
  return ok ? kOk : kFailure;
}

int cmd_sweep(const std::optional<std::string>& config, const std::vector<std::string>& extra, std::size_t seeds,
              const std::vector<std::string>& grid_args, const std::string& out) {
  if (seeds == 0) throw ConfigError("seeds: must be positive");
  const auto base = load(config, {}, extra);

  // Cartesian product over --grid key=v1,v2,...
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& g : grid_args) {
    const auto eq = g.find('=');
    if (eq == std::string::npos) throw ConfigError("grid: expected key=v1,v2, got '" + g + "'");
    axes.emplace_back(g.substr(0, eq), split_list(g.substr(eq + 1)));
    if (axes.back().second.empty()) throw ConfigError(axes.back().first + ": empty grid");
  }
  std::vector<KeyValues> points{{}};
  for (const auto& [key, values] : axes) {
    std::vector<KeyValues> next;
    for (const auto& p : points)
      for (const auto& v : values) {
        auto q = p;
        q.emplace_back(key, v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& point : points) {
    LoadedConfig cfg = base;
    std::string label;
    for (const auto& [k, v] : point) {
      apply_setting(cfg, k, v);
      label += (label.empty() ? "" : " ") + k + "=" + v;
    }
    cfg.run.validate();
    std::vector<nlohmann::json> summaries;
    for (std::size_t s = 0; s < seeds; ++s) {
      auto run_cfg = cfg.run;
      run_cfg.seed = base.run.seed + s;
      summaries.push_back(summary_json(run(run_cfg)));
    }
    const auto agg = aggregate_best(summaries);
    std::printf("%-40s %s (%zu seeds)\n", label.empty() ? "(base)" : label.c_str(), format_mean_std(agg).c_str(),
                seeds);
    rows.push_back({{"settings", label}, {"mean", agg.mean}, {"std", agg.std}, {"runs", summaries}});
  }
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw IoError("cannot open '" + out + "' for writing");
    f << rows.dump(2) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized federated learning simulator"};
  app.require_subcommand(1);

  std::optional<std::string> config;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "Execute one run; extra --key value pairs override the config file");
  run_cmd->add_option("-c,--config", config, "key = value configuration file");
  run_cmd->add_flag("-q,--quiet", quiet, "No per-round progress on stderr");
  run_cmd->allow_extras();

  std::string out;
  auto* part_cmd = app.add_subcommand("partition", "Generate a partition and dump it as JSON");
  part_cmd->add_option("-c,--config", config, "key = value configuration file");
  part_cmd->add_option("-o,--out", out, "Output path (default stdout)");
  part_cmd->allow_extras();

  std::string lambdas = "-0.1,0,0.1";
  std::size_t seeds = 10;
  auto* toy_cmd = app.add_subcommand("toy", "Pull/push sweep over a list of toy_lambda values");
  toy_cmd->add_option("-c,--config", config, "key = value configuration file");
  toy_cmd->add_option("--lambdas", lambdas, "Comma-separated toy_lambda values");
  toy_cmd->add_option("--seeds", seeds, "Seeds per value");
  toy_cmd->allow_extras();

  std::size_t pools = 1000, instances = 100;
  std::uint64_t check_seed = 0;
  auto* check_cmd = app.add_subcommand("check-grad", "Finite-difference and combination-weight self-checks");
  check_cmd->add_option("--pools", pools, "Random pools for the weight identities");
  check_cmd->add_option("--instances", instances, "Random instances per gradient check");
  check_cmd->add_option("--seed", check_seed, "Seed");

  std::size_t sweep_seeds = 5;
  std::vector<std::string> grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat run over seeds and a settings grid");
  sweep_cmd->add_option("-c,--config", config, "key = value configuration file");
  sweep_cmd->add_option("--seeds", sweep_seeds, "Seeds per grid point");
  sweep_cmd->add_option("--grid", grid, "key=v1,v2,... (repeatable)");
  sweep_cmd->add_option("-o,--out", out, "Aggregated JSON output");
  sweep_cmd->allow_extras();

  auto args = glue_values(argc, argv);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run_cmd) return cmd_run(config, run_cmd->remaining(), quiet);
    if (*part_cmd) return cmd_partition(config, part_cmd->remaining(), out);
    if (*toy_cmd) return cmd_toy(config, toy_cmd->remaining(), lambdas, seeds);
    if (*check_cmd) return cmd_check_grad(pools, instances, check_seed);
    if (*sweep_cmd) return cmd_sweep(config, sweep_cmd->remaining(), sweep_seeds, grid, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kInvalid;
}
