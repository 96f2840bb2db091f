#pragma once

// Flattened model parameters and the distance geometry over them.

#include <cmath>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace diversifed {

struct ClientId {
  std::size_t value = 0;

  constexpr ClientId() = default;
  constexpr explicit ClientId(std::size_t v) : value(v) {}
  friend constexpr auto operator<=>(ClientId, ClientId) = default;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model's parameters as one real vector. Every operation in the library
/// that produces a ParamVector keeps its elements finite.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }
  [[nodiscard]] bool empty() const noexcept { return values_.empty(); }

  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<double> values() noexcept { return values_; }
  [[nodiscard]] const std::vector<double>& raw() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  [[nodiscard]] auto begin() const noexcept { return values_.begin(); }
  [[nodiscard]] auto end() const noexcept { return values_.end(); }

  [[nodiscard]] bool all_finite() const noexcept {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  // Bitwise-style equality: element-wise ==.
  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

inline void require_same_dim(const ParamVector& a, const ParamVector& b, const char* what) {
  if (a.dim() != b.dim())
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()) + ")");
}

/// Running sum with Neumaier compensation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

[[nodiscard]] inline double squared_distance(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "squared_distance");
  CompensatedSum acc;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    const double d = a[k] - b[k];
    acc.add(d * d);
  }
  return acc.value();
}

[[nodiscard]] inline double euclidean_distance(const ParamVector& a, const ParamVector& b) {
  return std::sqrt(squared_distance(a, b));
}

// ---------------------------------------------------------------------------
// Structured models and the canonical flattening order.

/// One dense layer: `weights` is row-major with shape rows x cols
/// (rows = fan_out, cols = fan_in), `bias` has `rows` entries.
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  [[nodiscard]] std::size_t size() const noexcept { return rows * cols + rows; }
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

using StructuredModel = std::vector<DenseLayer>;

/// Layer by layer, weights (row-major) before biases.
[[nodiscard]] inline ParamVector flatten(const StructuredModel& model) {
  std::size_t dim = 0;
  for (const auto& layer : model) {
    if (layer.weights.size() != layer.rows * layer.cols || layer.bias.size() != layer.rows)
      throw DimensionError("flatten: layer storage does not match its shape");
    dim += layer.weights.size() + layer.bias.size();
  }
  std::vector<double> out;
  out.reserve(dim);
  for (const auto& layer : model) {
    out.insert(out.end(), layer.weights.begin(), layer.weights.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return ParamVector(std::move(out));
}

[[nodiscard]] inline StructuredModel unflatten(const ParamVector& params,
                                               std::span<const LayerShape> shapes) {
  std::size_t dim = 0;
  for (const auto& s : shapes) dim += s.size();
  if (dim != params.dim())
    throw DimensionError("unflatten: vector has dim " + std::to_string(params.dim()) +
                         ", shapes require " + std::to_string(dim));
  StructuredModel model;
  model.reserve(shapes.size());
  auto it = params.begin();
  for (const auto& s : shapes) {
    DenseLayer layer{s.rows, s.cols, {}, {}};
    layer.weights.assign(it, it + static_cast<std::ptrdiff_t>(s.rows * s.cols));
    it += static_cast<std::ptrdiff_t>(s.rows * s.cols);
    layer.bias.assign(it, it + static_cast<std::ptrdiff_t>(s.rows));
    it += static_cast<std::ptrdiff_t>(s.rows);
    model.push_back(std::move(layer));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Pools of models held by the server in one round.

class ModelPool {
 public:
  struct Entry {
    ClientId id;
    ParamVector params;
  };

  ModelPool() = default;

  void add(ClientId id, ParamVector params) {
    if (!entries_.empty() && params.dim() != entries_.front().params.dim())
      throw DimensionError("ModelPool: all models must share one dimension");
    for (const auto& e : entries_)
      if (e.id == id)
        throw std::invalid_argument("ModelPool: duplicate client id " + std::to_string(id.value));
    entries_.push_back({id, std::move(params)});
    distances_.reset();
  }

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept {
    return entries_.empty() ? 0 : entries_.front().params.dim();
  }
  [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
  [[nodiscard]] const Entry& operator[](std::size_t pos) const { return entries_[pos]; }

  [[nodiscard]] std::size_t position_of(ClientId id) const {
    for (std::size_t p = 0; p < entries_.size(); ++p)
      if (entries_[p].id == id) return p;
    throw std::out_of_range("ModelPool: client " + std::to_string(id.value) + " not in pool");
  }

  [[nodiscard]] bool contains(ClientId id) const noexcept {
    for (const auto& e : entries_)
      if (e.id == id) return true;
    return false;
  }

  /// Precomputes all pairwise distances. After this call, const readers may
  /// share the pool across threads without recomputation.
  void cache_distances() {
    const std::size_t n = entries_.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        d[a * n + b] = d[b * n + a] = euclidean_distance(entries_[a].params, entries_[b].params);
    distances_ = std::move(d);
  }

  [[nodiscard]] bool has_distance_cache() const noexcept { return distances_.has_value(); }

  [[nodiscard]] double distance(std::size_t a, std::size_t b) const {
    if (distances_) return (*distances_)[a * entries_.size() + b];
    return euclidean_distance(entries_[a].params, entries_[b].params);
  }

 private:
  std::vector<Entry> entries_;
  std::optional<std::vector<double>> distances_;
};

/// Scaled distances from one center to every other pool member.
struct DistanceRow {
  struct Item {
    ClientId other;
    std::size_t position = 0;  // index into the pool
    double distance = 0.0;     // already divided by tau
  };
  ClientId center;
  std::size_t center_position = 0;
  std::vector<Item> entries;
};

struct DistanceOptions {
  double tau = 1.0;
  bool normalize_by_sqrt_dim = false;
};

[[nodiscard]] inline DistanceRow distance_row(const ModelPool& pool, ClientId center,
                                              DistanceOptions opts = {}) {
  if (pool.size() < 2)
    throw std::invalid_argument("distance loss undefined for fewer than two clients");
  if (!(opts.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const std::size_t c = pool.position_of(center);
  const double scale =
      opts.normalize_by_sqrt_dim && pool.dim() > 0 ? std::sqrt(static_cast<double>(pool.dim())) : 1.0;
  DistanceRow row{center, c, {}};
  row.entries.reserve(pool.size() - 1);
  for (std::size_t p = 0; p < pool.size(); ++p) {
    if (p == c) continue;
    double d = pool.distance(c, p);
    if (scale != 1.0) d /= scale;
    row.entries.push_back({pool[p].id, p, d / opts.tau});
  }
  return row;
}

}  // namespace diversifed
