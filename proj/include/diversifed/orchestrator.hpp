#pragma once

// Round loops: DiversiFed, the FedAvg and Separate baselines, and the
// pull/push toy experiment. Every round trains its participants on a worker
// pool over an immutable snapshot, then the server step runs single-threaded.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "diversifed/client_trainer.hpp"
#include "diversifed/datasets.hpp"
#include "diversifed/distance_core.hpp"
#include "diversifed/neural.hpp"
#include "diversifed/param_space.hpp"
#include "diversifed/rng.hpp"

namespace diversifed {

/// Raised for invalid run configurations (distinct from runtime failures).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Method { diversifed, fedavg, separate, toy_pullpush };

[[nodiscard]] inline const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::diversifed: return "diversifed";
    case Method::fedavg: return "fedavg";
    case Method::separate: return "separate";
    case Method::toy_pullpush: return "toy_pullpush";
  }
  return "?";
}

enum class DatasetKind { blobs, idx };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::blobs;
  BlobSpec blobs{10, 2000, 20, 3.0, 1.0, 0};
  std::string train_images, train_labels, test_images, test_labels;
};

struct PartitionConfig {
  Scheme scheme = Scheme::pathological;
  double alpha = 0.1;
  std::size_t classes_per_client = 2;
  PracticalLayout practical;
  std::size_t train_per_client = 300;
  std::size_t test_per_client = 100;
};

struct RunConfig {
  Method method = Method::diversifed;
  std::size_t n_clients = 40;
  std::size_t rounds = 500;
  ClientHyper client;  // lambda, alpha_t, epochs, batch_size, lr
  ServerHyper server;  // tau, alpha_t, epsilon_dist, normalize_by_sqrt_dim
  std::vector<std::size_t> hidden{64};
  DatasetConfig dataset;
  PartitionConfig partition;
  double participation_fraction = 1.0;
  std::uint64_t seed = 0;
  double toy_lambda = 0.0;
  std::size_t threads = 1;
  bool verify_anchors = false;

  void validate() const {
    if (n_clients == 0) throw ConfigError("n_clients: must be positive");
    if (rounds == 0) throw ConfigError("rounds: must be positive");
    if (!(participation_fraction > 0.0 && participation_fraction <= 1.0))
      throw ConfigError("participation_fraction: must be in (0, 1]");
    if (!(client.lambda >= 0.0) || !std::isfinite(client.lambda)) throw ConfigError("lambda: must be nonnegative");
    if (!(server.tau > 0.0) || !std::isfinite(server.tau)) throw ConfigError("tau: must be positive");
    if (!(client.alpha_t > 0.0) || !std::isfinite(client.alpha_t)) throw ConfigError("alpha_t: must be positive");
    if (client.alpha_t != server.alpha_t) throw ConfigError("alpha_t: client and server values differ");
    if (!(server.epsilon_dist > 0.0)) throw ConfigError("epsilon_dist: must be positive");
    if (client.epochs == 0) throw ConfigError("local_epochs: must be positive");
    if (client.batch_size == 0) throw ConfigError("batch_size: must be positive");
    if (!(client.lr > 0.0) || !std::isfinite(client.lr)) throw ConfigError("lr: must be positive");
    if (!std::isfinite(toy_lambda)) throw ConfigError("toy_lambda: must be finite");
    for (auto h : hidden)
      if (h == 0) throw ConfigError("model.hidden: sizes must be positive");
    if (partition.train_per_client == 0) throw ConfigError("partition.train_per_client: must be positive");
    if (partition.test_per_client == 0) throw ConfigError("partition.test_per_client: must be positive");
    if (partition.scheme == Scheme::dirichlet && !(partition.alpha > 0.0))
      throw ConfigError("partition.alpha: must be positive");
    if (partition.classes_per_client == 0) throw ConfigError("partition.classes_per_client: must be positive");
    if (!(partition.practical.dominant_fraction >= 0.0 && partition.practical.dominant_fraction <= 1.0))
      throw ConfigError("partition.dominant_fraction: must be in [0, 1]");
    if (partition.practical.n_groups == 0) throw ConfigError("partition.groups: must be positive");
    if (dataset.kind == DatasetKind::blobs) {
      if (dataset.blobs.num_classes < 2) throw ConfigError("dataset.num_classes: need at least two classes");
      if (dataset.blobs.samples_per_class == 0) throw ConfigError("dataset.samples_per_class: must be positive");
      if (dataset.blobs.feature_dim == 0) throw ConfigError("dataset.feature_dim: must be positive");
      if (!(dataset.blobs.noise_sigma >= 0.0)) throw ConfigError("dataset.noise_sigma: must be nonnegative");
    } else if (dataset.train_images.empty() || dataset.train_labels.empty()) {
      throw ConfigError("dataset.train_images: idx datasets need image and label paths");
    }
  }
};

struct RoundRecord {
  std::size_t round = 0;
  std::vector<double> accuracy;    // every client, participant or not
  double mean_accuracy = 0.0;
  std::vector<double> train_loss;  // last local-training loss per client (NaN before first)
  std::vector<std::size_t> participants;
};

struct RunReport {
  RunConfig config;
  std::vector<RoundRecord> rounds;
  double best_mean_accuracy = 0.0;
  std::size_t best_round = 0;
  double final_mean_accuracy = 0.0;
  std::vector<double> per_client_best;
  double wall_clock_seconds = 0.0;
  std::vector<ParamVector> final_models;
};

using RoundCallback = std::function<void(const RoundRecord&)>;

/// The per-client data and shared initial model for one run.
struct Federation {
  MlpSpec spec;
  std::vector<ClientState> clients;
};

[[nodiscard]] inline LabeledDataset build_dataset(const RunConfig& cfg) {
  if (cfg.dataset.kind == DatasetKind::idx) {
    auto train = load_idx(cfg.dataset.train_images, cfg.dataset.train_labels);
    if (cfg.dataset.test_images.empty()) return train;
    return with_test_split(std::move(train), load_idx(cfg.dataset.test_images, cfg.dataset.test_labels));
  }
  BlobSpec blobs = cfg.dataset.blobs;
  blobs.seed = cfg.seed;
  return synth_blobs(blobs);
}

[[nodiscard]] inline PartitionSpec build_partition(const RunConfig& cfg, const LabeledDataset& ds) {
  const auto& p = cfg.partition;
  switch (p.scheme) {
    case Scheme::pathological:
      return partition_pathological(ds, cfg.n_clients, p.classes_per_client, p.train_per_client, p.test_per_client,
                                    cfg.seed);
    case Scheme::dirichlet:
      return partition_dirichlet(ds, cfg.n_clients, p.alpha, p.train_per_client, p.test_per_client, cfg.seed);
    case Scheme::practical:
      return partition_practical(ds, cfg.n_clients, p.practical, p.train_per_client, p.test_per_client, cfg.seed);
  }
  throw ConfigError("partition.scheme: unknown");
}

[[nodiscard]] inline MlpSpec model_spec(const RunConfig& cfg, std::size_t input_dim, std::size_t num_classes) {
  MlpSpec spec;
  spec.layer_sizes.push_back(input_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  spec.layer_sizes.push_back(num_classes);
  return spec;
}

/// Every client starts from one shared initialization drawn from the master seed.
[[nodiscard]] inline Federation make_federation(const RunConfig& cfg, const LabeledDataset& ds,
                                                const PartitionSpec& partition) {
  Federation fed;
  fed.spec = model_spec(cfg, ds.feature_dim(), ds.num_classes);
  const ParamVector init = init_params(fed.spec, derive_seed({cfg.seed, stream::kInit}));
  for (std::size_t i = 0; i < cfg.n_clients; ++i) {
    auto [train, test] = materialize(ds, partition, ClientId{i});
    fed.clients.push_back({ClientId{i}, init, AdamState(init.dim(), cfg.client.lr), std::move(train), std::move(test)});
  }
  return fed;
}

[[nodiscard]] inline Federation prepare_federation(const RunConfig& cfg) {
  cfg.validate();
  const auto ds = build_dataset(cfg);
  return make_federation(cfg, ds, build_partition(cfg, ds));
}

/// ceil(fraction * N) distinct clients, uniformly at random, fixed by
/// (master_seed, round). Returned in ascending order.
[[nodiscard]] inline std::vector<std::size_t> sample_participants(std::size_t n_clients, double fraction,
                                                                  std::uint64_t round, std::uint64_t master_seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("participation_fraction: must be in (0, 1]");
  std::vector<std::size_t> ids(n_clients);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  if (fraction == 1.0) return ids;
  const auto m = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n_clients) - 1e-9));
  Engine rng = make_engine({master_seed, stream::kParticipation, round});
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(std::max<std::size_t>(1, m));
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace detail {

template <class Fn>
void parallel_for(const std::vector<std::size_t>& items, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, items.size());
  if (threads <= 1) {
    for (auto i : items) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < items.size(); k = next++) {
        try {
          fn(items[k]);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  pool.clear();
  if (error) std::rethrow_exception(error);
}

inline RoundRecord evaluate_round(std::size_t round, const std::vector<ClientState>& clients, const MlpSpec& spec,
                                  const std::vector<std::size_t>& participants, const ParamVector* shared = nullptr) {
  RoundRecord rec;
  rec.round = round;
  rec.participants = participants;
  double sum = 0.0;
  for (const auto& c : clients) {
    const double acc = evaluate_accuracy(shared ? *shared : c.params, spec, c.test);
    rec.accuracy.push_back(acc);
    rec.train_loss.push_back(c.last_train_loss);
    sum += acc;
  }
  rec.mean_accuracy = sum / static_cast<double>(clients.size());
  return rec;
}

inline RunReport finish_report(const RunConfig& cfg, std::vector<RoundRecord> rounds,
                               const std::vector<ClientState>& clients,
                               std::chrono::steady_clock::time_point started) {
  RunReport rep;
  rep.config = cfg;
  rep.rounds = std::move(rounds);
  rep.per_client_best.assign(cfg.n_clients, 0.0);
  rep.best_mean_accuracy = -1.0;
  for (const auto& r : rep.rounds) {
    if (r.mean_accuracy > rep.best_mean_accuracy) {
      rep.best_mean_accuracy = r.mean_accuracy;
      rep.best_round = r.round;
    }
    for (std::size_t i = 0; i < r.accuracy.size(); ++i)
      rep.per_client_best[i] = std::max(rep.per_client_best[i], r.accuracy[i]);
  }
  rep.final_mean_accuracy = rep.rounds.empty() ? 0.0 : rep.rounds.back().mean_accuracy;
  for (const auto& c : clients) rep.final_models.push_back(c.params);
  rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

inline void emit(const RoundCallback& cb, const RoundRecord& rec) {
  if (cb) cb(rec);
}

}  // namespace detail

/// Checks z_i == sum(beta * w) over `pool` to `tol` per coordinate.
inline void verify_anchor_identity(const ModelPool& pool, ClientId center, const ServerHyper& hyper,
                                   const ParamVector& anchor, double tol = 1e-9) {
  const ParamVector combo = apply_weights(pool, combination_weights(pool, center, hyper));
  for (std::size_t k = 0; k < anchor.dim(); ++k)
    if (std::abs(combo[k] - anchor[k]) > tol)
      throw std::logic_error("anchor identity violated for client " + std::to_string(center.value) + " at coordinate " +
                             std::to_string(k));
}

/// DiversiFed. A participant trains against the most recent anchor the server
/// computed for it; a client that has no anchor yet (round 0, or never part
/// of a pool of two or more) trains on the empirical loss alone. Anchors are
/// computed over the participating pool only.
[[nodiscard]] inline RunReport run_diversifed(const RunConfig& cfg, Federation fed, const RoundCallback& on_round = {}) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const MlpCrossEntropy loss{fed.spec};
  std::vector<std::optional<ParamVector>> anchors(cfg.n_clients);
  std::vector<RoundRecord> records;
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    const auto participants = sample_participants(cfg.n_clients, cfg.participation_fraction, t, cfg.seed);
    detail::parallel_for(participants, cfg.threads, [&](std::size_t i) {
      const ParamVector* anchor = anchors[i] ? &*anchors[i] : nullptr;
      fed.clients[i] = local_update(std::move(fed.clients[i]), anchor, cfg.client, loss, {cfg.seed, t});
    });

    if (participants.size() >= 2) {
      ModelPool pool;
      for (auto i : participants) pool.add(ClientId{i}, fed.clients[i].params);
      pool.cache_distances();
      for (auto i : participants) {
        ParamVector z = server_step(pool, ClientId{i}, cfg.server);
        if (cfg.verify_anchors) verify_anchor_identity(pool, ClientId{i}, cfg.server, z);
        anchors[i] = std::move(z);
      }
    }

    records.push_back(detail::evaluate_round(t, fed.clients, fed.spec, participants));
    detail::emit(on_round, records.back());
  }
  return detail::finish_report(cfg, std::move(records), fed.clients, started);
}

/// Independent local training every round; no communication.
[[nodiscard]] inline RunReport run_separate(const RunConfig& cfg, Federation fed, const RoundCallback& on_round = {}) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const MlpCrossEntropy loss{fed.spec};
  std::vector<std::size_t> everyone(cfg.n_clients);
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});
  std::vector<RoundRecord> records;
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    detail::parallel_for(everyone, cfg.threads, [&](std::size_t i) {
      fed.clients[i] = local_update(std::move(fed.clients[i]), nullptr, cfg.client, loss, {cfg.seed, t});
    });
    records.push_back(detail::evaluate_round(t, fed.clients, fed.spec, everyone));
    detail::emit(on_round, records.back());
  }
  return detail::finish_report(cfg, std::move(records), fed.clients, started);
}

/// One global model; participants start from it, train on the empirical loss
/// and the server averages their results weighted by train-set size. Every
/// client is evaluated with the global model.
[[nodiscard]] inline RunReport run_fedavg(const RunConfig& cfg, Federation fed, const RoundCallback& on_round = {}) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const MlpCrossEntropy loss{fed.spec};
  ParamVector global = fed.clients.front().params;
  std::vector<RoundRecord> records;
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    const auto participants = sample_participants(cfg.n_clients, cfg.participation_fraction, t, cfg.seed);
    detail::parallel_for(participants, cfg.threads, [&](std::size_t i) {
      fed.clients[i].params = global;
      fed.clients[i] = local_update(std::move(fed.clients[i]), nullptr, cfg.client, loss, {cfg.seed, t});
    });
    double total = 0.0;
    for (auto i : participants) total += static_cast<double>(fed.clients[i].train.size());
    ParamVector next(global.dim());
    for (auto i : participants) {
      const double w = static_cast<double>(fed.clients[i].train.size()) / total;
      const auto& p = fed.clients[i].params;
      for (std::size_t k = 0; k < next.dim(); ++k) next[k] += w * p[k];
    }
    global = std::move(next);
    records.push_back(detail::evaluate_round(t, fed.clients, fed.spec, participants, &global));
    detail::emit(on_round, records.back());
  }
  auto report = detail::finish_report(cfg, std::move(records), fed.clients, started);
  for (auto& m : report.final_models) m = global;
  return report;
}

/// Adds toy_lambda * sum_j (w - w_j) / ||w - w_j|| over a frozen snapshot of
/// the other clients' models; pairs closer than epsilon contribute nothing.
struct PairwiseNormGradient {
  const std::vector<ParamVector>* snapshot = nullptr;
  std::size_t self = 0;
  double lambda = 0.0;
  double epsilon = 1e-8;

  void operator()(const ParamVector& params, ParamVector& grad) const {
    if (lambda == 0.0) return;
    for (std::size_t j = 0; j < snapshot->size(); ++j) {
      if (j == self) continue;
      const auto& other = (*snapshot)[j];
      const double dist = euclidean_distance(params, other);
      if (dist < epsilon) continue;
      const double c = lambda / dist;
      for (std::size_t k = 0; k < grad.dim(); ++k) grad[k] += c * (params[k] - other[k]);
    }
  }
};

/// Every client minimizes L_ce(w_i) + toy_lambda * sum_{j != i} ||w_i - w_j||
/// against the other models as they stood at the start of the round.
[[nodiscard]] inline RunReport run_toy_pullpush(const RunConfig& cfg, Federation fed,
                                                const RoundCallback& on_round = {}) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const MlpCrossEntropy loss{fed.spec};
  std::vector<std::size_t> everyone(cfg.n_clients);
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});
  std::vector<RoundRecord> records;
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    std::vector<ParamVector> snapshot;
    for (const auto& c : fed.clients) snapshot.push_back(c.params);
    detail::parallel_for(everyone, cfg.threads, [&](std::size_t i) {
      const PairwiseNormGradient term{&snapshot, i, cfg.toy_lambda, cfg.server.epsilon_dist};
      fed.clients[i] = local_train(std::move(fed.clients[i]), cfg.client, loss, term, {cfg.seed, t});
    });
    records.push_back(detail::evaluate_round(t, fed.clients, fed.spec, everyone));
    detail::emit(on_round, records.back());
  }
  return detail::finish_report(cfg, std::move(records), fed.clients, started);
}

[[nodiscard]] inline RunReport run(const RunConfig& cfg, Federation fed, const RoundCallback& on_round = {}) {
  switch (cfg.method) {
    case Method::diversifed: return run_diversifed(cfg, std::move(fed), on_round);
    case Method::fedavg: return run_fedavg(cfg, std::move(fed), on_round);
    case Method::separate: return run_separate(cfg, std::move(fed), on_round);
    case Method::toy_pullpush: return run_toy_pullpush(cfg, std::move(fed), on_round);
  }
  throw ConfigError("method: unknown");
}

[[nodiscard]] inline RunReport run(const RunConfig& cfg, const RoundCallback& on_round = {}) {
  return run(cfg, prepare_federation(cfg), on_round);
}

}  // namespace diversifed
