#pragma once

// One client's local update: E epochs of mini-batch Adam on the empirical
// loss plus the proximal pull toward the server anchor,
//
//   L_e(w) + lambda / (2 alpha_t) * ||w - z||^2,
//
// or on L_e alone when no anchor has been served yet.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "diversifed/neural.hpp"
#include "diversifed/param_space.hpp"
#include "diversifed/rng.hpp"

namespace diversifed {

struct ClientHyper {
  double lambda = 2.0;
  double alpha_t = 1.0;
  std::size_t epochs = 10;
  std::size_t batch_size = 100;
  double lr = 1e-3;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be nonnegative");
    if (!(alpha_t > 0.0) || !std::isfinite(alpha_t)) throw std::invalid_argument("alpha_t must be positive");
    if (epochs == 0) throw std::invalid_argument("local_epochs must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be positive");
  }
};

struct ClientState {
  ClientId id;
  ParamVector params;
  AdamState adam;
  Batch train;
  Batch test;
  double last_train_loss = std::numeric_limits<double>::quiet_NaN();
};

/// Identifies the shuffling stream of one local update.
struct TrainingStream {
  std::uint64_t master_seed = 0;
  std::uint64_t round = 0;
};

/// Empirical loss over the MLP: mean softmax cross-entropy.
struct MlpCrossEntropy {
  MlpSpec spec;
  [[nodiscard]] LossAndGrad operator()(const ParamVector& params, const Batch& batch) const {
    return cross_entropy_loss_and_grad(params, spec, batch);
  }
};

struct NoExtraGradient {
  void operator()(const ParamVector&, ParamVector&) const noexcept {}
};

/// Mini-batch Adam over `epochs` shuffled passes. `extra(params, grad)` may add
/// regularizer gradients to each mini-batch gradient before the step.
/// Returns the sample-weighted mean empirical loss of the final epoch.
template <class Loss, class Extra = NoExtraGradient>
double train_epochs(ParamVector& params, AdamState& adam, const Batch& train, std::size_t epochs,
                    std::size_t batch_size, ClientId id, TrainingStream stream, const Loss& loss,
                    const Extra& extra = {}) {
  if (train.empty()) throw std::invalid_argument("local training on an empty training set");
  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  double last_epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Engine rng = make_engine({stream.master_seed, stream::kShuffle, id.value, stream.round, epoch});
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t stop = std::min(n, start + batch_size);
      const Batch mb = train.gather(std::span<const std::size_t>(order).subspan(start, stop - start));
      LossAndGrad lg = loss(params, mb);
      extra(params, lg.grad);
      adam_step(adam, params, lg.grad);
      epoch_loss += lg.loss * static_cast<double>(stop - start);
    }
    last_epoch_loss = epoch_loss / static_cast<double>(n);
  }
  return last_epoch_loss;
}

[[nodiscard]] inline double proximal_penalty(const ParamVector& params, const ParamVector& anchor, double lambda,
                                             double alpha_t) {
  require_same_dim(params, anchor, "proximal_penalty");
  return lambda / (2.0 * alpha_t) * squared_distance(params, anchor);
}

/// Adds (lambda / alpha_t) * (w - z) to a gradient.
struct ProximalGradient {
  const ParamVector* anchor = nullptr;
  double coefficient = 0.0;

  void operator()(const ParamVector& params, ParamVector& grad) const {
    if (anchor == nullptr || coefficient == 0.0) return;
    for (std::size_t k = 0; k < grad.dim(); ++k) grad[k] += coefficient * (params[k] - (*anchor)[k]);
  }
};

/// Resets the optimizer and runs E local epochs of `loss` plus `extra`.
template <class Loss, class Extra>
[[nodiscard]] ClientState local_train(ClientState state, const ClientHyper& hyper, const Loss& loss, const Extra& extra,
                                      TrainingStream stream) {
  hyper.validate();
  state.adam = AdamState(state.params.dim(), hyper.lr);
  state.last_train_loss =
      train_epochs(state.params, state.adam, state.train, hyper.epochs, hyper.batch_size, state.id, stream, loss, extra);
  return state;
}

/// `anchor == nullptr` is the first-round branch (empirical loss only).
/// The optimizer state is reset at the start of every call.
template <class Loss>
[[nodiscard]] ClientState local_update(ClientState state, const ParamVector* anchor, const ClientHyper& hyper,
                                       const Loss& loss, TrainingStream stream) {
  if (anchor != nullptr) require_same_dim(state.params, *anchor, "local_update");
  const ProximalGradient prox{anchor, anchor != nullptr ? hyper.lambda / hyper.alpha_t : 0.0};
  return local_train(std::move(state), hyper, loss, prox, stream);
}

[[nodiscard]] inline ClientState local_update(ClientState state, const ParamVector* anchor, const ClientHyper& hyper,
                                              const MlpSpec& spec, TrainingStream stream) {
  return local_update(std::move(state), anchor, hyper, MlpCrossEntropy{spec}, stream);
}

}  // namespace diversifed
