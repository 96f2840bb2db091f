#pragma once

// Flat key = value configuration files, command-line overrides and the JSON
// echo of a RunConfig. Nested settings use dotted keys (partition.scheme).

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "diversifed/orchestrator.hpp"

namespace diversifed {

struct OutputPaths {
  std::string csv;
  std::string json;
};

struct LoadedConfig {
  RunConfig run;
  OutputPaths output;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

[[nodiscard]] inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "method", "n_clients", "rounds", "local_epochs", "batch_size", "lambda", "tau", "alpha_t", "lr",
      "participation_fraction", "seed", "toy_lambda", "epsilon_dist", "normalize_by_sqrt_dim", "threads",
      "verify_anchors", "model.hidden", "partition.scheme", "partition.alpha", "partition.classes_per_client",
      "partition.groups", "partition.dominant_classes_per_group", "partition.dominant_fraction",
      "partition.train_per_client", "partition.test_per_client", "dataset.kind", "dataset.train_images",
      "dataset.train_labels", "dataset.test_images", "dataset.test_labels", "dataset.num_classes",
      "dataset.samples_per_class", "dataset.feature_dim", "dataset.separation", "dataset.noise_sigma",
      "output.csv", "output.json"};
  return keys;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_count(key, item));
  }
  return out;
}

}  // namespace detail

[[nodiscard]] inline Method method_from_string(const std::string& s) {
  if (s == "diversifed") return Method::diversifed;
  if (s == "fedavg") return Method::fedavg;
  if (s == "separate") return Method::separate;
  if (s == "toy_pullpush" || s == "toy") return Method::toy_pullpush;
  throw ConfigError("method: unknown method '" + s + "'");
}

[[nodiscard]] inline const char* to_string(DatasetKind k) noexcept { return k == DatasetKind::idx ? "idx" : "blobs"; }

[[nodiscard]] inline DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "blobs") return DatasetKind::blobs;
  if (s == "idx") return DatasetKind::idx;
  throw ConfigError("dataset.kind: expected idx or blobs, got '" + s + "'");
}

/// Applies one setting. Unknown keys and malformed values name the key.
inline void apply_setting(LoadedConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  auto& r = cfg.run;
  if (key == "method") r.method = method_from_string(value);
  else if (key == "n_clients") r.n_clients = parse_count(key, value);
  else if (key == "rounds") r.rounds = parse_count(key, value);
  else if (key == "local_epochs") r.client.epochs = parse_count(key, value);
  else if (key == "batch_size") r.client.batch_size = parse_count(key, value);
  else if (key == "lambda") r.client.lambda = parse_real(key, value);
  else if (key == "tau") r.server.tau = parse_real(key, value);
  else if (key == "alpha_t") r.client.alpha_t = r.server.alpha_t = parse_real(key, value);
  else if (key == "lr") r.client.lr = parse_real(key, value);
  else if (key == "participation_fraction") r.participation_fraction = parse_real(key, value);
  else if (key == "seed") r.seed = parse_count(key, value);
  else if (key == "toy_lambda") r.toy_lambda = parse_real(key, value);
  else if (key == "epsilon_dist") r.server.epsilon_dist = parse_real(key, value);
  else if (key == "normalize_by_sqrt_dim") r.server.normalize_by_sqrt_dim = parse_bool(key, value);
  else if (key == "threads") r.threads = parse_count(key, value);
  else if (key == "verify_anchors") r.verify_anchors = parse_bool(key, value);
  else if (key == "model.hidden") r.hidden = parse_sizes(key, value);
  else if (key == "partition.scheme") {
    try {
      r.partition.scheme = scheme_from_string(value);
    } catch (const std::invalid_argument&) {
      throw ConfigError(key + ": expected pathological, dirichlet or practical, got '" + value + "'");
    }
  } else if (key == "partition.alpha") r.partition.alpha = parse_real(key, value);
  else if (key == "partition.classes_per_client") r.partition.classes_per_client = parse_count(key, value);
  else if (key == "partition.groups") r.partition.practical.n_groups = parse_count(key, value);
  else if (key == "partition.dominant_classes_per_group")
    r.partition.practical.dominant_classes_per_group = parse_count(key, value);
  else if (key == "partition.dominant_fraction") r.partition.practical.dominant_fraction = parse_real(key, value);
  else if (key == "partition.train_per_client") r.partition.train_per_client = parse_count(key, value);
  else if (key == "partition.test_per_client") r.partition.test_per_client = parse_count(key, value);
  else if (key == "dataset.kind") r.dataset.kind = dataset_kind_from_string(value);
  else if (key == "dataset.train_images") r.dataset.train_images = value;
  else if (key == "dataset.train_labels") r.dataset.train_labels = value;
  else if (key == "dataset.test_images") r.dataset.test_images = value;
  else if (key == "dataset.test_labels") r.dataset.test_labels = value;
  else if (key == "dataset.num_classes") r.dataset.blobs.num_classes = parse_count(key, value);
  else if (key == "dataset.samples_per_class") r.dataset.blobs.samples_per_class = parse_count(key, value);
  else if (key == "dataset.feature_dim") r.dataset.blobs.feature_dim = parse_count(key, value);
  else if (key == "dataset.separation") r.dataset.blobs.class_separation = parse_real(key, value);
  else if (key == "dataset.noise_sigma") r.dataset.blobs.noise_sigma = parse_real(key, value);
  else if (key == "output.csv") cfg.output.csv = value;
  else if (key == "output.json") cfg.output.json = value;
  else throw ConfigError(key + ": unknown configuration key");
}

/// Reads `key = value` lines; `#` starts a comment, blank lines are skipped.
[[nodiscard]] inline KeyValues parse_key_values(std::istream& in, const std::string& source = "config") {
  KeyValues out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

/// Turns `--key value` / `--key=value` pairs into settings. `--alpha` is the
/// Dirichlet concentration (partition.alpha).
[[nodiscard]] inline KeyValues overrides_from_args(const std::vector<std::string>& args) {
  KeyValues out;
  for (std::size_t k = 0; k < args.size(); ++k) {
    const std::string& a = args[k];
    if (a.rfind("--", 0) != 0) throw ConfigError(a + ": unexpected argument");
    std::string key = a.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else {
      if (k + 1 >= args.size()) throw ConfigError(key + ": missing value");
      value = args[++k];
    }
    if (key == "alpha") key = "partition.alpha";
    if (key == "epochs") key = "local_epochs";
    std::replace(key.begin(), key.end(), '-', '_');
    out.emplace_back(key, value);
  }
  return out;
}

/// File settings first, then overrides; the result is validated.
[[nodiscard]] inline LoadedConfig load_config(const std::optional<std::string>& path, const KeyValues& overrides = {}) {
  LoadedConfig cfg;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("config: cannot open '" + *path + "'");
    for (const auto& [k, v] : parse_key_values(in, *path)) apply_setting(cfg, k, v);
  }
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
  cfg.run.validate();
  return cfg;
}

[[nodiscard]] inline nlohmann::json config_to_json(const RunConfig& r) {
  const auto& b = r.dataset.blobs;
  const auto& p = r.partition;
  return {
      {"method", to_string(r.method)},
      {"n_clients", r.n_clients},
      {"rounds", r.rounds},
      {"local_epochs", r.client.epochs},
      {"batch_size", r.client.batch_size},
      {"lambda", r.client.lambda},
      {"tau", r.server.tau},
      {"alpha_t", r.client.alpha_t},
      {"lr", r.client.lr},
      {"participation_fraction", r.participation_fraction},
      {"seed", r.seed},
      {"toy_lambda", r.toy_lambda},
      {"epsilon_dist", r.server.epsilon_dist},
      {"normalize_by_sqrt_dim", r.server.normalize_by_sqrt_dim},
      {"threads", r.threads},
      {"verify_anchors", r.verify_anchors},
      {"model", {{"hidden", r.hidden}}},
      {"partition",
       {{"scheme", to_string(p.scheme)},
        {"alpha", p.alpha},
        {"classes_per_client", p.classes_per_client},
        {"groups", p.practical.n_groups},
        {"dominant_classes_per_group", p.practical.dominant_classes_per_group},
        {"dominant_fraction", p.practical.dominant_fraction},
        {"train_per_client", p.train_per_client},
        {"test_per_client", p.test_per_client}}},
      {"dataset",
       {{"kind", to_string(r.dataset.kind)},
        {"train_images", r.dataset.train_images},
        {"train_labels", r.dataset.train_labels},
        {"test_images", r.dataset.test_images},
        {"test_labels", r.dataset.test_labels},
        {"num_classes", b.num_classes},
        {"samples_per_class", b.samples_per_class},
        {"feature_dim", b.feature_dim},
        {"separation", b.class_separation},
        {"noise_sigma", b.noise_sigma}}},
  };
}

[[nodiscard]] inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig r;
  r.method = method_from_string(j.at("method").get<std::string>());
  r.n_clients = j.at("n_clients").get<std::size_t>();
  r.rounds = j.at("rounds").get<std::size_t>();
  r.client.epochs = j.at("local_epochs").get<std::size_t>();
  r.client.batch_size = j.at("batch_size").get<std::size_t>();
  r.client.lambda = j.at("lambda").get<double>();
  r.server.tau = j.at("tau").get<double>();
  r.client.alpha_t = r.server.alpha_t = j.at("alpha_t").get<double>();
  r.client.lr = j.at("lr").get<double>();
  r.participation_fraction = j.at("participation_fraction").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.toy_lambda = j.at("toy_lambda").get<double>();
  r.server.epsilon_dist = j.at("epsilon_dist").get<double>();
  r.server.normalize_by_sqrt_dim = j.at("normalize_by_sqrt_dim").get<bool>();
  r.threads = j.at("threads").get<std::size_t>();
  r.verify_anchors = j.at("verify_anchors").get<bool>();
  r.hidden = j.at("model").at("hidden").get<std::vector<std::size_t>>();
  const auto& p = j.at("partition");
  r.partition.scheme = scheme_from_string(p.at("scheme").get<std::string>());
  r.partition.alpha = p.at("alpha").get<double>();
  r.partition.classes_per_client = p.at("classes_per_client").get<std::size_t>();
  r.partition.practical.n_groups = p.at("groups").get<std::size_t>();
  r.partition.practical.dominant_classes_per_group = p.at("dominant_classes_per_group").get<std::size_t>();
  r.partition.practical.dominant_fraction = p.at("dominant_fraction").get<double>();
  r.partition.train_per_client = p.at("train_per_client").get<std::size_t>();
  r.partition.test_per_client = p.at("test_per_client").get<std::size_t>();
  const auto& d = j.at("dataset");
  r.dataset.kind = dataset_kind_from_string(d.at("kind").get<std::string>());
  r.dataset.train_images = d.at("train_images").get<std::string>();
  r.dataset.train_labels = d.at("train_labels").get<std::string>();
  r.dataset.test_images = d.at("test_images").get<std::string>();
  r.dataset.test_labels = d.at("test_labels").get<std::string>();
  r.dataset.blobs.num_classes = d.at("num_classes").get<std::size_t>();
  r.dataset.blobs.samples_per_class = d.at("samples_per_class").get<std::size_t>();
  r.dataset.blobs.feature_dim = d.at("feature_dim").get<std::size_t>();
  r.dataset.blobs.class_separation = d.at("separation").get<double>();
  r.dataset.blobs.noise_sigma = d.at("noise_sigma").get<double>();
  return r;
}

}  // namespace diversifed
