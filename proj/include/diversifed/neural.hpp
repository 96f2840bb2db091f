#pragma once

// A small dense network trained from scratch: ReLU hidden layers, identity
// output, mean softmax cross-entropy and Adam. Parameters live in a flat
// ParamVector using the same layout as flatten(): per layer, a row-major
// fan_out x fan_in weight block followed by the fan_out biases.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diversifed/param_space.hpp"
#include "diversifed/rng.hpp"

namespace diversifed {

struct MlpSpec {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., classes

  void validate() const {
    if (layer_sizes.size() < 2) throw std::invalid_argument("MlpSpec needs at least two layer sizes");
    for (auto s : layer_sizes)
      if (s == 0) throw std::invalid_argument("MlpSpec layer sizes must be positive");
  }

  [[nodiscard]] std::size_t input_dim() const { return layer_sizes.front(); }
  [[nodiscard]] std::size_t num_classes() const { return layer_sizes.back(); }
  [[nodiscard]] std::size_t num_layers() const { return layer_sizes.size() - 1; }

  [[nodiscard]] std::vector<LayerShape> layer_shapes() const {
    std::vector<LayerShape> shapes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
      shapes.push_back({layer_sizes[l + 1], layer_sizes[l]});
    return shapes;
  }

  [[nodiscard]] std::size_t num_params() const {
    std::size_t n = 0;
    for (const auto& s : layer_shapes()) n += s.size();
    return n;
  }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Row-major real matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  [[nodiscard]] std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  [[nodiscard]] std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct Batch {
  Matrix inputs;
  std::vector<std::size_t> labels;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] bool empty() const noexcept { return labels.empty(); }

  void validate(std::size_t num_classes) const {
    if (inputs.rows != labels.size())
      throw std::invalid_argument("Batch: input rows and label count differ");
    for (auto l : labels)
      if (l >= num_classes)
        throw std::invalid_argument("Batch: label " + std::to_string(l) + " out of range");
  }

  /// Copies the listed rows, in the given order.
  [[nodiscard]] Batch gather(std::span<const std::size_t> rows) const {
    Batch out;
    out.inputs = Matrix(rows.size(), inputs.cols);
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = inputs.row(rows[r]);
      std::copy(src.begin(), src.end(), out.inputs.row(r).begin());
      out.labels.push_back(labels[rows[r]]);
    }
    return out;
  }
};

/// Glorot-uniform weights, zero biases.
[[nodiscard]] inline ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Engine rng(seed);
  ParamVector params(spec.num_params());
  std::size_t off = 0;
  for (const auto& s : spec.layer_shapes()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t k = 0; k < s.rows * s.cols; ++k) params[off + k] = dist(rng);
    off += s.size();
  }
  return params;
}

namespace detail {

inline void check_shapes(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
  spec.validate();
  if (params.dim() != spec.num_params())
    throw DimensionError("MLP: parameter vector has dim " + std::to_string(params.dim()) +
                         ", spec requires " + std::to_string(spec.num_params()));
  if (batch.inputs.cols != spec.input_dim())
    throw DimensionError("MLP: input dim " + std::to_string(batch.inputs.cols) + " does not match spec " +
                         std::to_string(spec.input_dim()));
  if (batch.inputs.rows != batch.labels.size())
    throw DimensionError("MLP: input rows and label count differ");
}

// out = in * W^T + b, with optional ReLU.
inline Matrix dense_forward(const Matrix& in, const double* w, const double* b, std::size_t rows,
                            bool relu) {
  Matrix out(in.rows, rows);
  for (std::size_t s = 0; s < in.rows; ++s) {
    const double* x = in.data.data() + s * in.cols;
    double* y = out.data.data() + s * rows;
    for (std::size_t j = 0; j < rows; ++j) {
      const double* wj = w + j * in.cols;
      double acc = b[j];
      for (std::size_t k = 0; k < in.cols; ++k) acc += wj[k] * x[k];
      y[j] = relu ? std::max(acc, 0.0) : acc;
    }
  }
  return out;
}

// Activations of every layer, input first, logits last.
inline std::vector<Matrix> forward_all(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
  std::vector<Matrix> acts;
  acts.reserve(spec.layer_sizes.size());
  acts.push_back(batch.inputs);
  std::size_t off = 0;
  const auto shapes = spec.layer_shapes();
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto& s = shapes[l];
    const double* w = params.values().data() + off;
    const double* b = w + s.rows * s.cols;
    acts.push_back(dense_forward(acts.back(), w, b, s.rows, l + 1 < shapes.size()));
    off += s.size();
  }
  return acts;
}

}  // namespace detail

[[nodiscard]] inline Matrix forward(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
  detail::check_shapes(params, spec, batch);
  auto acts = detail::forward_all(params, spec, batch);
  return std::move(acts.back());
}

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

[[nodiscard]] inline LossAndGrad cross_entropy_loss_and_grad(const ParamVector& params, const MlpSpec& spec,
                                                             const Batch& batch) {
  detail::check_shapes(params, spec, batch);
  if (batch.empty()) throw std::invalid_argument("cross-entropy on an empty batch");
  batch.validate(spec.num_classes());

  const auto acts = detail::forward_all(params, spec, batch);
  const auto shapes = spec.layer_shapes();
  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Softmax cross-entropy and dL/dlogits.
  const Matrix& logits = acts.back();
  Matrix delta(n, logits.cols);
  double loss = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto z = logits.row(s);
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    loss += lse - z[batch.labels[s]];
    auto d = delta.row(s);
    for (std::size_t c = 0; c < z.size(); ++c) d[c] = std::exp(z[c] - lse) * inv_n;
    d[batch.labels[s]] -= inv_n;
  }

  ParamVector grad(params.dim());
  std::size_t off = params.dim();
  for (std::size_t l = shapes.size(); l-- > 0;) {
    const auto& sh = shapes[l];
    off -= sh.size();
    const Matrix& in = acts[l];
    double* gw = grad.values().data() + off;
    double* gb = gw + sh.rows * sh.cols;
    for (std::size_t s = 0; s < n; ++s) {
      const double* x = in.data.data() + s * in.cols;
      const double* d = delta.data.data() + s * sh.rows;
      for (std::size_t j = 0; j < sh.rows; ++j) {
        const double dj = d[j];
        if (dj == 0.0) continue;
        gb[j] += dj;
        double* gwj = gw + j * sh.cols;
        for (std::size_t k = 0; k < sh.cols; ++k) gwj[k] += dj * x[k];
      }
    }
    if (l == 0) break;
    // Propagate to the previous (ReLU) layer.
    const double* w = params.values().data() + off;
    Matrix prev(n, sh.cols);
    for (std::size_t s = 0; s < n; ++s) {
      const double* d = delta.data.data() + s * sh.rows;
      double* p = prev.data.data() + s * sh.cols;
      for (std::size_t j = 0; j < sh.rows; ++j) {
        const double dj = d[j];
        if (dj == 0.0) continue;
        const double* wj = w + j * sh.cols;
        for (std::size_t k = 0; k < sh.cols; ++k) p[k] += dj * wj[k];
      }
      const double* a = in.data.data() + s * in.cols;
      for (std::size_t k = 0; k < sh.cols; ++k)
        if (a[k] <= 0.0) p[k] = 0.0;
    }
    delta = std::move(prev);
  }
  return {loss * inv_n, std::move(grad)};
}

struct AdamState {
  ParamVector m;
  ParamVector v;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t dim, double learning_rate) : m(dim), v(dim), lr(learning_rate) {}

  void reset() {
    std::fill(m.begin(), m.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    step = 0;
  }
};

inline void adam_step(AdamState& state, ParamVector& params, const ParamVector& grad) {
  require_same_dim(params, grad, "adam_step");
  require_same_dim(params, state.m, "adam_step");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.dim(); ++k) {
    const double g = grad[k];
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[k] / c1;
    const double vhat = state.v[k] / c2;
    params[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

/// Index of the largest entry; ties go to the lowest index.
[[nodiscard]] inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < v.size(); ++c)
    if (v[c] > v[best]) best = c;
  return best;
}

[[nodiscard]] inline double evaluate_accuracy(const ParamVector& params, const MlpSpec& spec, const Batch& test) {
  if (test.empty()) throw std::invalid_argument("accuracy on an empty test set");
  const Matrix logits = forward(params, spec, test);
  std::size_t correct = 0;
  for (std::size_t s = 0; s < test.size(); ++s)
    if (argmax(logits.row(s)) == test.labels[s]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace diversifed
