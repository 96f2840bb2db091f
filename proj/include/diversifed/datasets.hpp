#pragma once

// Labeled data sources (IDX files, Gaussian blobs) and the label-skew
// partitioners that hand each client a train and a test shard.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "diversifed/neural.hpp"
#include "diversifed/param_space.hpp"
#include "diversifed/rng.hpp"

namespace diversifed {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledDataset {
  Matrix inputs;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  // When set, rows [test_begin, size) form a designated test split and
  // partitioners draw test shards only from there.
  std::optional<std::size_t> test_begin;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] std::size_t feature_dim() const noexcept { return inputs.cols; }
};

// ---------------------------------------------------------------------------
// IDX

namespace detail {

inline std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw DataError(path + ": truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

inline std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads an IDX image/label file pair. Pixels are scaled to [0,1].
[[nodiscard]] inline LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw DataError(images_path + ": cannot open");
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw DataError(labels_path + ": cannot open");

  const auto img_magic = detail::read_be32(img, images_path);
  if (img_magic != kIdxImagesMagic)
    throw DataError(images_path + ": bad IDX image magic " + detail::hex32(img_magic) + " (expected 0x00000803)");
  const auto lab_magic = detail::read_be32(lab, labels_path);
  if (lab_magic != kIdxLabelsMagic)
    throw DataError(labels_path + ": bad IDX label magic " + detail::hex32(lab_magic) + " (expected 0x00000801)");

  const std::size_t n = detail::read_be32(img, images_path);
  const std::size_t rows = detail::read_be32(img, images_path);
  const std::size_t cols = detail::read_be32(img, images_path);
  const std::size_t n_labels = detail::read_be32(lab, labels_path);
  if (n != n_labels)
    throw DataError("IDX sample count mismatch: " + images_path + " has " + std::to_string(n) + ", " + labels_path +
                    " has " + std::to_string(n_labels));

  LabeledDataset ds;
  ds.inputs = Matrix(n, rows * cols);
  std::vector<unsigned char> pixels(n * rows * cols);
  if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
    throw DataError(images_path + ": truncated pixel data");
  for (std::size_t k = 0; k < pixels.size(); ++k) ds.inputs.data[k] = static_cast<double>(pixels[k]) / 255.0;

  std::vector<unsigned char> labels(n);
  if (!lab.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size())))
    throw DataError(labels_path + ": truncated label data");
  ds.labels.assign(labels.begin(), labels.end());
  ds.num_classes = n == 0 ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  return ds;
}

/// Concatenates a train and a test dataset, marking the test split.
[[nodiscard]] inline LabeledDataset with_test_split(LabeledDataset train, const LabeledDataset& test) {
  if (train.feature_dim() != test.feature_dim()) throw DataError("train and test feature dims differ");
  train.test_begin = train.size();
  train.inputs.data.insert(train.inputs.data.end(), test.inputs.data.begin(), test.inputs.data.end());
  train.inputs.rows += test.inputs.rows;
  train.labels.insert(train.labels.end(), test.labels.begin(), test.labels.end());
  train.num_classes = std::max(train.num_classes, test.num_classes);
  return train;
}

// ---------------------------------------------------------------------------
// Gaussian blobs

struct BlobSpec {
  std::size_t num_classes = 10;
  std::size_t samples_per_class = 200;
  std::size_t feature_dim = 20;
  double class_separation = 1.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
};

/// Class c is centred at separation * u_c. The unit directions u_c are the
/// coordinate axes when feature_dim >= num_classes and fixed pseudo-random
/// directions otherwise; either way they do not depend on `seed`.
[[nodiscard]] inline std::vector<std::vector<double>> blob_centers(std::size_t num_classes, std::size_t feature_dim,
                                                                   double separation) {
  std::vector<std::vector<double>> centers(num_classes, std::vector<double>(feature_dim, 0.0));
  if (feature_dim >= num_classes) {
    for (std::size_t c = 0; c < num_classes; ++c) centers[c][c] = separation;
    return centers;
  }
  Engine rng(0xB10B5ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& u : centers) {
    double norm = 0.0;
    for (auto& x : u) {
      x = gauss(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : u) x *= separation / norm;
  }
  return centers;
}

[[nodiscard]] inline LabeledDataset synth_blobs(const BlobSpec& spec) {
  if (spec.num_classes == 0 || spec.samples_per_class == 0 || spec.feature_dim == 0)
    throw std::invalid_argument("synth_blobs: counts must be positive");
  const auto centers = blob_centers(spec.num_classes, spec.feature_dim, spec.class_separation);
  Engine rng = make_engine({spec.seed, stream::kDataset});
  std::normal_distribution<double> gauss(0.0, 1.0);
  LabeledDataset ds;
  ds.num_classes = spec.num_classes;
  ds.inputs = Matrix(spec.num_classes * spec.samples_per_class, spec.feature_dim);
  ds.labels.reserve(ds.inputs.rows);
  std::size_t r = 0;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++r) {
      auto row = ds.inputs.row(r);
      for (std::size_t k = 0; k < spec.feature_dim; ++k) {
        const double noise = spec.noise_sigma > 0.0 ? spec.noise_sigma * gauss(rng) : 0.0;
        row[k] = centers[c][k] + noise;
      }
      ds.labels.push_back(c);
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Partitions

enum class Scheme { pathological, dirichlet, practical };

[[nodiscard]] inline const char* to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::pathological: return "pathological";
    case Scheme::dirichlet: return "dirichlet";
    case Scheme::practical: return "practical";
  }
  return "?";
}

struct ClientSplit {
  ClientId id;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct PartitionSpec {
  Scheme scheme = Scheme::pathological;
  std::uint64_t seed = 0;
  std::optional<double> dirichlet_alpha;
  std::vector<ClientSplit> clients;
  // Samples handed out again after a class pool ran dry.
  std::size_t reused_samples = 0;

  [[nodiscard]] const ClientSplit& client(ClientId id) const {
    for (const auto& c : clients)
      if (c.id == id) return c;
    throw std::out_of_range("PartitionSpec: no client " + std::to_string(id.value));
  }
};

/// Integer counts summing to `total`, each within one of q_c * total.
/// Leftover units go to the largest fractional parts, ties to the lower class.
[[nodiscard]] inline std::vector<std::size_t> largest_remainder(const std::vector<double>& q, std::size_t total) {
  const double sum = std::accumulate(q.begin(), q.end(), 0.0);
  std::vector<std::size_t> counts(q.size(), 0);
  if (q.empty()) return counts;
  std::vector<double> frac(q.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < q.size(); ++c) {
    const double exact = sum > 0.0 ? q[c] / sum * static_cast<double>(total) : 0.0;
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    frac[c] = exact - static_cast<double>(counts[c]);
    assigned += counts[c];
  }
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[order[k % order.size()]];
  return counts;
}

namespace detail {

// Per-class queues of shuffled sample indices over one index range.
class ClassPools {
 public:
  ClassPools(const LabeledDataset& ds, std::size_t begin, std::size_t end, Engine& rng)
      : members_(ds.num_classes), cursor_(ds.num_classes, 0) {
    for (std::size_t i = begin; i < end; ++i) members_[ds.labels[i]].push_back(i);
    for (auto& m : members_) std::shuffle(m.begin(), m.end(), rng);
  }

  [[nodiscard]] std::size_t remaining(std::size_t c) const { return members_[c].size() - cursor_[c]; }
  [[nodiscard]] std::size_t total(std::size_t c) const { return members_[c].size(); }

  /// Takes `k` fresh samples of class c. Fails when the pool is exhausted.
  std::vector<std::size_t> take_fresh(std::size_t c, std::size_t k) {
    if (remaining(c) < k)
      throw DataError("insufficient samples in class " + std::to_string(c) + ": need " + std::to_string(k) +
                      ", have " + std::to_string(remaining(c)));
    std::vector<std::size_t> out(members_[c].begin() + static_cast<std::ptrdiff_t>(cursor_[c]),
                                 members_[c].begin() + static_cast<std::ptrdiff_t>(cursor_[c] + k));
    cursor_[c] += k;
    return out;
  }

  /// Takes fresh samples while they last, then reuses samples of class c that
  /// `used` (this client's indices so far) does not already contain.
  std::vector<std::size_t> take_with_reuse(std::size_t c, std::size_t k, std::set<std::size_t>& used, Engine& rng,
                                           std::size_t& reused) {
    std::vector<std::size_t> out;
    out.reserve(k);
    while (out.size() < k && remaining(c) > 0) {
      const std::size_t idx = members_[c][cursor_[c]++];
      if (used.insert(idx).second) out.push_back(idx);
    }
    if (out.size() < k) {
      std::vector<std::size_t> candidates;
      for (auto idx : members_[c])
        if (!used.contains(idx)) candidates.push_back(idx);
      const std::size_t need = k - out.size();
      if (candidates.size() < need)
        throw DataError("insufficient samples in class " + std::to_string(c) + " for one client: need " +
                        std::to_string(k) + ", class holds " + std::to_string(members_[c].size()));
      std::shuffle(candidates.begin(), candidates.end(), rng);
      for (std::size_t t = 0; t < need; ++t) {
        used.insert(candidates[t]);
        out.push_back(candidates[t]);
      }
      reused += need;
    }
    return out;
  }

 private:
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> cursor_;
};

struct SplitRanges {
  std::size_t train_end;
  std::size_t test_begin;
  bool shared;  // train and test share one pool
};

inline SplitRanges split_ranges(const LabeledDataset& ds) {
  if (ds.test_begin) return {*ds.test_begin, *ds.test_begin, false};
  return {ds.size(), 0, true};
}

inline void check_common(const LabeledDataset& ds, std::size_t n_clients, std::size_t train_per_client) {
  if (ds.num_classes == 0 || ds.size() == 0) throw std::invalid_argument("partition: empty dataset");
  if (n_clients == 0) throw std::invalid_argument("partition: n_clients must be positive");
  if (train_per_client == 0) throw std::invalid_argument("partition: train_per_client must be positive");
}

// Draws per-class train/test counts for every client, sampling without
// replacement while pools last and reusing samples afterwards.
inline PartitionSpec draw_with_counts(const LabeledDataset& ds,
                                      const std::vector<std::vector<std::size_t>>& train_counts,
                                      const std::vector<std::vector<std::size_t>>& test_counts, Engine& rng,
                                      PartitionSpec spec) {
  const auto ranges = split_ranges(ds);
  ClassPools train_pool(ds, 0, ranges.train_end, rng);
  std::optional<ClassPools> test_pool;
  if (!ranges.shared) test_pool.emplace(ds, ranges.test_begin, ds.size(), rng);
  for (std::size_t k = 0; k < train_counts.size(); ++k) {
    ClientSplit split{ClientId{k}, {}, {}};
    std::set<std::size_t> used;
    for (std::size_t c = 0; c < ds.num_classes; ++c) {
      auto tr = train_pool.take_with_reuse(c, train_counts[k][c], used, rng, spec.reused_samples);
      split.train.insert(split.train.end(), tr.begin(), tr.end());
    }
    for (std::size_t c = 0; c < ds.num_classes; ++c) {
      auto& pool = ranges.shared ? train_pool : *test_pool;
      auto te = pool.take_with_reuse(c, test_counts[k][c], used, rng, spec.reused_samples);
      split.test.insert(split.test.end(), te.begin(), te.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    spec.clients.push_back(std::move(split));
  }
  return spec;
}

}  // namespace detail

/// Each client holds exactly `classes_per_client` classes with (near) equal
/// counts. Client k's classes are perm[(k*c + m) mod C] for m < c, where perm
/// is a seeded permutation of the labels. Samples are never shared between
/// clients.
[[nodiscard]] inline PartitionSpec partition_pathological(const LabeledDataset& ds, std::size_t n_clients,
                                                          std::size_t classes_per_client, std::size_t train_per_client,
                                                          std::size_t test_per_client, std::uint64_t seed) {
  detail::check_common(ds, n_clients, train_per_client);
  const std::size_t C = ds.num_classes;
  if (classes_per_client == 0 || classes_per_client > C)
    throw std::invalid_argument("partition: classes_per_client must be in [1, num_classes]");

  Engine rng = make_engine({seed, stream::kPartition});
  std::vector<std::size_t> perm(C);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  const auto ranges = detail::split_ranges(ds);
  detail::ClassPools train_pool(ds, 0, ranges.train_end, rng);
  std::optional<detail::ClassPools> test_pool;
  if (!ranges.shared) test_pool.emplace(ds, ranges.test_begin, ds.size(), rng);

  PartitionSpec spec{Scheme::pathological, seed, std::nullopt, {}, 0};
  const std::vector<double> equal(classes_per_client, 1.0);
  const auto train_counts = largest_remainder(equal, train_per_client);
  const auto test_counts = largest_remainder(equal, test_per_client);
  for (std::size_t k = 0; k < n_clients; ++k) {
    ClientSplit split{ClientId{k}, {}, {}};
    for (std::size_t m = 0; m < classes_per_client; ++m) {
      const std::size_t c = perm[(k * classes_per_client + m) % C];
      auto tr = train_pool.take_fresh(c, train_counts[m]);
      split.train.insert(split.train.end(), tr.begin(), tr.end());
      auto& pool = ranges.shared ? train_pool : *test_pool;
      auto te = pool.take_fresh(c, test_counts[m]);
      split.test.insert(split.test.end(), te.begin(), te.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    spec.clients.push_back(std::move(split));
  }
  return spec;
}

/// Samples from Gamma(shape) in log space; stable for shapes far below one.
inline double log_gamma_sample(double shape, Engine& rng) {
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = g(rng);
  double v = u(rng);
  while (x <= 0.0) x = g(rng);
  while (v <= 0.0) v = u(rng);
  return std::log(x) + std::log(v) / shape;
}

/// q ~ Dir(concentration) drawn via normalized log-gammas.
[[nodiscard]] inline std::vector<double> sample_dirichlet(const std::vector<double>& concentration, Engine& rng) {
  std::vector<double> logs(concentration.size());
  for (std::size_t c = 0; c < logs.size(); ++c) logs[c] = log_gamma_sample(concentration[c], rng);
  const double m = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (auto& l : logs) sum += (l = std::exp(l - m));
  for (auto& l : logs) l /= sum;
  return logs;
}

/// Per client, class proportions q ~ Dir(alpha * p) with p uniform; train and
/// test counts both follow q via largest-remainder rounding.
[[nodiscard]] inline PartitionSpec partition_dirichlet(const LabeledDataset& ds, std::size_t n_clients, double alpha,
                                                       std::size_t train_per_client, std::size_t test_per_client,
                                                       std::uint64_t seed, std::vector<std::vector<double>>* drawn_q = nullptr) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("partition: dirichlet alpha must be positive");
  detail::check_common(ds, n_clients, train_per_client);
  const std::size_t C = ds.num_classes;
  Engine rng = make_engine({seed, stream::kPartition});
  const std::vector<double> concentration(C, alpha / static_cast<double>(C));
  std::vector<std::vector<std::size_t>> train_counts, test_counts;
  if (drawn_q) drawn_q->clear();
  for (std::size_t k = 0; k < n_clients; ++k) {
    const auto q = sample_dirichlet(concentration, rng);
    train_counts.push_back(largest_remainder(q, train_per_client));
    test_counts.push_back(largest_remainder(q, test_per_client));
    if (drawn_q) drawn_q->push_back(q);
  }
  return detail::draw_with_counts(ds, train_counts, test_counts, rng,
                                  PartitionSpec{Scheme::dirichlet, seed, alpha, {}, 0});
}

struct PracticalLayout {
  std::size_t n_groups = 3;
  std::size_t dominant_classes_per_group = 3;
  double dominant_fraction = 0.8;
};

/// Group sizes for `n_clients` split into `n_groups`; the remainder goes to
/// the last group.
[[nodiscard]] inline std::vector<std::size_t> practical_group_sizes(std::size_t n_clients, std::size_t n_groups) {
  if (n_groups == 0 || n_groups > n_clients) throw std::invalid_argument("partition: invalid number of groups");
  std::vector<std::size_t> sizes(n_groups, n_clients / n_groups);
  sizes.back() += n_clients % n_groups;
  return sizes;
}

[[nodiscard]] inline std::size_t practical_group_of(std::size_t client, std::size_t n_clients, std::size_t n_groups) {
  const auto sizes = practical_group_sizes(n_clients, n_groups);
  std::size_t acc = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    acc += sizes[g];
    if (client < acc) return g;
  }
  return sizes.size() - 1;
}

/// Group g dominates classes [g*k, (g+1)*k). Each client takes
/// round(dominant_fraction * budget) samples spread evenly over its dominant
/// classes and the rest evenly over all other classes.
[[nodiscard]] inline PartitionSpec partition_practical(const LabeledDataset& ds, std::size_t n_clients,
                                                       const PracticalLayout& layout, std::size_t train_per_client,
                                                       std::size_t test_per_client, std::uint64_t seed) {
  detail::check_common(ds, n_clients, train_per_client);
  const std::size_t C = ds.num_classes;
  const std::size_t k = layout.dominant_classes_per_group;
  if (k == 0 || layout.n_groups * k > C)
    throw std::invalid_argument("partition: n_groups * dominant_classes_per_group exceeds num_classes");
  if (!(layout.dominant_fraction >= 0.0 && layout.dominant_fraction <= 1.0))
    throw std::invalid_argument("partition: dominant_fraction must be in [0, 1]");
  if (layout.dominant_fraction < 1.0 && k == C)
    throw std::invalid_argument("partition: no non-dominant classes to draw from");
  (void)practical_group_sizes(n_clients, layout.n_groups);

  auto counts_for = [&](std::size_t group, std::size_t budget) {
    const auto dominant_total =
        static_cast<std::size_t>(std::llround(layout.dominant_fraction * static_cast<double>(budget)));
    std::vector<double> dom_q(C, 0.0), rest_q(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      const bool dominant = c >= group * k && c < (group + 1) * k;
      (dominant ? dom_q : rest_q)[c] = 1.0;
    }
    auto counts = largest_remainder(dom_q, dominant_total);
    if (budget > dominant_total) {
      const auto rest = largest_remainder(rest_q, budget - dominant_total);
      for (std::size_t c = 0; c < C; ++c) counts[c] += rest[c];
    }
    return counts;
  };

  Engine rng = make_engine({seed, stream::kPartition});
  std::vector<std::vector<std::size_t>> train_counts, test_counts;
  for (std::size_t i = 0; i < n_clients; ++i) {
    const std::size_t g = practical_group_of(i, n_clients, layout.n_groups);
    train_counts.push_back(counts_for(g, train_per_client));
    test_counts.push_back(counts_for(g, test_per_client));
  }
  return detail::draw_with_counts(ds, train_counts, test_counts, rng,
                                  PartitionSpec{Scheme::practical, seed, std::nullopt, {}, 0});
}

/// Gathers one client's shards (rows in ascending index order).
[[nodiscard]] inline std::pair<Batch, Batch> materialize(const LabeledDataset& ds, const PartitionSpec& spec,
                                                         ClientId id) {
  const auto& split = spec.client(id);
  auto gather = [&](std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    Batch b;
    b.inputs = Matrix(idx.size(), ds.feature_dim());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] >= ds.size())
        throw std::out_of_range("materialize: index " + std::to_string(idx[r]) + " out of range");
      const auto src = ds.inputs.row(idx[r]);
      std::copy(src.begin(), src.end(), b.inputs.row(r).begin());
      b.labels.push_back(ds.labels[idx[r]]);
    }
    return b;
  };
  return {gather(split.train), gather(split.test)};
}

[[nodiscard]] inline std::vector<std::size_t> label_histogram(const std::vector<std::size_t>& labels,
                                                              std::size_t num_classes) {
  std::vector<std::size_t> h(num_classes, 0);
  for (auto l : labels) ++h.at(l);
  return h;
}

// ---------------------------------------------------------------------------
// JSON form: {scheme, seed, clients: [{id, train_indices, test_indices}]}

[[nodiscard]] inline nlohmann::json to_json(const PartitionSpec& spec) {
  nlohmann::json j;
  j["scheme"] = to_string(spec.scheme);
  j["seed"] = spec.seed;
  if (spec.dirichlet_alpha) j["alpha"] = *spec.dirichlet_alpha;
  j["reused_samples"] = spec.reused_samples;
  auto& clients = j["clients"] = nlohmann::json::array();
  for (const auto& c : spec.clients)
    clients.push_back({{"id", c.id.value}, {"train_indices", c.train}, {"test_indices", c.test}});
  return j;
}

[[nodiscard]] inline Scheme scheme_from_string(const std::string& s) {
  if (s == "pathological") return Scheme::pathological;
  if (s == "dirichlet") return Scheme::dirichlet;
  if (s == "practical") return Scheme::practical;
  throw std::invalid_argument("unknown partition scheme '" + s + "'");
}

[[nodiscard]] inline PartitionSpec partition_from_json(const nlohmann::json& j) {
  PartitionSpec spec;
  spec.scheme = scheme_from_string(j.at("scheme").get<std::string>());
  spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("alpha")) spec.dirichlet_alpha = j["alpha"].get<double>();
  spec.reused_samples = j.value("reused_samples", std::size_t{0});
  for (const auto& c : j.at("clients"))
    spec.clients.push_back({ClientId{c.at("id").get<std::size_t>()},
                            c.at("train_indices").get<std::vector<std::size_t>>(),
                            c.at("test_indices").get<std::vector<std::size_t>>()});
  return spec;
}

}  // namespace diversifed
