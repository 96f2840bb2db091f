#include <gtest/gtest.h>

#include <sstream>

#include "diversifed/config.hpp"

using namespace diversifed;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

LoadedConfig from_text(const std::string& text, const KeyValues& overrides = {}) {
  std::istringstream in(text);
  LoadedConfig cfg;
  for (const auto& [k, v] : parse_key_values(in)) apply_setting(cfg, k, v);
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
  cfg.run.validate();
  return cfg;
}

}  // namespace

TEST(Config, EmptyConfigGivesDefaults) {
  const auto cfg = load_config(std::nullopt);
  EXPECT_EQ(cfg.run.n_clients, 40u);
  EXPECT_EQ(cfg.run.rounds, 500u);
  EXPECT_EQ(cfg.run.client.epochs, 10u);
  EXPECT_EQ(cfg.run.client.batch_size, 100u);
  EXPECT_EQ(cfg.run.client.lambda, 2.0);
  EXPECT_EQ(cfg.run.client.alpha_t, 1.0);
  EXPECT_EQ(cfg.run.server.alpha_t, 1.0);
  EXPECT_EQ(cfg.run.server.tau, 1.0);
}

TEST(Config, ParsesEveryDocumentedKey) {
  const auto cfg = from_text(R"(
# comment line
method = fedavg
n_clients = 12      # trailing comment
rounds = 7
local_epochs = 3
batch_size = 32
lambda = 1.5
tau = 0.9
alpha_t = 0.5
lr = 0.01
participation_fraction = 0.7
seed = 99
toy_lambda = -0.1
epsilon_dist = 1e-6
normalize_by_sqrt_dim = true
threads = 2
verify_anchors = yes
model.hidden = 32, 16
partition.scheme = practical
partition.alpha = 0.3
partition.classes_per_client = 3
partition.groups = 2
partition.dominant_classes_per_group = 4
partition.dominant_fraction = 0.6
partition.train_per_client = 50
partition.test_per_client = 20
dataset.kind = blobs
dataset.num_classes = 8
dataset.samples_per_class = 300
dataset.feature_dim = 12
dataset.separation = 2.5
dataset.noise_sigma = 0.5
output.csv = out.csv
output.json = out.json
)");
  const auto& r = cfg.run;
  EXPECT_EQ(r.method, Method::fedavg);
  EXPECT_EQ(r.n_clients, 12u);
  EXPECT_EQ(r.rounds, 7u);
  EXPECT_EQ(r.client.epochs, 3u);
  EXPECT_EQ(r.client.batch_size, 32u);
  EXPECT_EQ(r.client.lambda, 1.5);
  EXPECT_EQ(r.server.tau, 0.9);
  EXPECT_EQ(r.client.alpha_t, 0.5);
  EXPECT_EQ(r.server.alpha_t, 0.5);
  EXPECT_EQ(r.client.lr, 0.01);
  EXPECT_EQ(r.participation_fraction, 0.7);
  EXPECT_EQ(r.seed, 99u);
  EXPECT_EQ(r.toy_lambda, -0.1);
  EXPECT_EQ(r.server.epsilon_dist, 1e-6);
  EXPECT_TRUE(r.server.normalize_by_sqrt_dim);
  EXPECT_EQ(r.threads, 2u);
  EXPECT_TRUE(r.verify_anchors);
  EXPECT_EQ(r.hidden, (std::vector<std::size_t>{32, 16}));
  EXPECT_EQ(r.partition.scheme, Scheme::practical);
  EXPECT_EQ(r.partition.alpha, 0.3);
  EXPECT_EQ(r.partition.classes_per_client, 3u);
  EXPECT_EQ(r.partition.practical.n_groups, 2u);
  EXPECT_EQ(r.partition.practical.dominant_classes_per_group, 4u);
  EXPECT_EQ(r.partition.practical.dominant_fraction, 0.6);
  EXPECT_EQ(r.partition.train_per_client, 50u);
  EXPECT_EQ(r.partition.test_per_client, 20u);
  EXPECT_EQ(r.dataset.blobs.num_classes, 8u);
  EXPECT_EQ(r.dataset.blobs.samples_per_class, 300u);
  EXPECT_EQ(r.dataset.blobs.feature_dim, 12u);
  EXPECT_EQ(r.dataset.blobs.class_separation, 2.5);
  EXPECT_EQ(r.dataset.blobs.noise_sigma, 0.5);
  EXPECT_EQ(cfg.output.csv, "out.csv");
  EXPECT_EQ(cfg.output.json, "out.json");
}

TEST(Config, CommandLineOverridesWin) {
  const auto overrides = overrides_from_args({"--tau", "0.9", "--lambda", "2", "--alpha", "0.1"});
  const auto cfg = from_text("tau = 0.5\nlambda = 1\npartition.alpha = 5\n", overrides);
  EXPECT_EQ(cfg.run.server.tau, 0.9);
  EXPECT_EQ(cfg.run.client.lambda, 2.0);
  EXPECT_EQ(cfg.run.partition.alpha, 0.1);
}

TEST(Config, OverrideForms) {
  const auto kv = overrides_from_args({"--rounds=3", "--partition.scheme", "dirichlet", "--local-epochs", "2"});
  ASSERT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"rounds", "3"}));
  EXPECT_EQ(kv[1].first, "partition.scheme");
  EXPECT_EQ(kv[2].first, "local_epochs");
  EXPECT_THROW((void)overrides_from_args({"--tau"}), ConfigError);
  EXPECT_THROW((void)overrides_from_args({"tau", "1"}), ConfigError);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(error_of([] { (void)from_text("participation_fraction = 1.5"); }).rfind("participation_fraction", 0), 0u);
  EXPECT_EQ(error_of([] { (void)from_text("colour = blue"); }).rfind("colour", 0), 0u);
  EXPECT_EQ(error_of([] { (void)from_text("rounds = many"); }).rfind("rounds", 0), 0u);
  EXPECT_EQ(error_of([] { (void)from_text("rounds = -3"); }).rfind("rounds", 0), 0u);
  EXPECT_EQ(error_of([] { (void)from_text("tau = 1.0x"); }).rfind("tau", 0), 0u);
  EXPECT_EQ(error_of([] { (void)from_text("verify_anchors = maybe"); }).rfind("verify_anchors", 0), 0u);
  EXPECT_EQ(error_of([] { (void)from_text("method = magic"); }).rfind("method", 0), 0u);
  EXPECT_EQ(error_of([] { (void)from_text("partition.scheme = iid"); }).rfind("partition.scheme", 0), 0u);
  EXPECT_EQ(error_of([] { (void)from_text("tau = 0"); }).rfind("tau", 0), 0u);
  EXPECT_FALSE(error_of([] { (void)from_text("just some words"); }).empty());
  EXPECT_FALSE(error_of([] { (void)load_config(std::string("/nonexistent/file.cfg")); }).empty());
}

TEST(Config, EveryListedKeyIsAccepted) {
  for (const auto& key : config_keys()) {
    LoadedConfig cfg;
    std::string value = "1";
    if (key == "method") value = "separate";
    if (key == "partition.scheme") value = "dirichlet";
    if (key == "dataset.kind") value = "blobs";
    if (key == "normalize_by_sqrt_dim" || key == "verify_anchors") value = "false";
    EXPECT_NO_THROW(apply_setting(cfg, key, value)) << key;
  }
}

TEST(Config, JsonRoundTrip) {
  auto cfg = from_text("method = toy\ntoy_lambda = -0.1\nmodel.hidden = 10,5\npartition.scheme = dirichlet\n"
                       "partition.alpha = 0.25\nalpha_t = 0.5\nseed = 12345678901\n");
  const auto j = config_to_json(cfg.run);
  const auto back = config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(config_to_json(back), j);
  EXPECT_EQ(back.method, Method::toy_pullpush);
  EXPECT_EQ(back.hidden, (std::vector<std::size_t>{10, 5}));
  EXPECT_EQ(back.seed, 12345678901u);
  EXPECT_EQ(back.server.alpha_t, 0.5);
}
