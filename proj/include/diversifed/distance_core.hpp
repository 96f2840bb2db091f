#pragma once

// Model distance loss over a pool of personalized models, its gradient with
// respect to one center model, the server's one-step anchor update, and the
// linear-combination view of that anchor.
//
// For a center i with the rest of the pool a(i), M = |a(i)|, and scaled
// distances d_j = ||w_i - w_j|| / tau:
//
//   L_d(w_i)   = (1/M) * sum_j log softmax(d)_j
//   grad L_d   = sum_j xi_j * (w_i - w_j) / (tau^2 * d_j),  xi_j = 1/M - softmax(d)_j
//   z_i        = w_i - alpha_t * grad L_d
//              = beta_self * w_i + sum_j beta_j * w_j,
//   beta_j     = alpha_t * xi_j / (tau^2 * d_j),  beta_self = 1 - sum_j beta_j
//
// Pairs with d_j < epsilon_dist contribute nothing to the gradient or to the
// betas (coincident models make the per-pair direction undefined).

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "diversifed/param_space.hpp"

namespace diversifed {

struct ServerHyper {
  double tau = 1.0;
  double alpha_t = 1.0;
  double epsilon_dist = 1e-8;
  bool normalize_by_sqrt_dim = false;

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
    if (!(alpha_t > 0.0) || !std::isfinite(alpha_t))
      throw std::invalid_argument("alpha_t must be positive");
    if (!(epsilon_dist > 0.0)) throw std::invalid_argument("epsilon_dist must be positive");
  }

  [[nodiscard]] DistanceOptions distance_options() const noexcept {
    return {tau, normalize_by_sqrt_dim};
  }
};

struct WeightedOther {
  ClientId other;
  double value = 0.0;
};

struct CombinationWeights {
  ClientId center;
  double beta_self = 1.0;
  std::vector<WeightedOther> betas;

  [[nodiscard]] double total() const noexcept {
    double s = beta_self;
    for (const auto& b : betas) s += b.value;
    return s;
  }
};

enum class Relation { attract, repel, neutral };

struct PairRelation {
  ClientId other;
  Relation relation = Relation::neutral;
  double beta = 0.0;
  bool guarded = false;
};

namespace detail {

inline double max_distance(const DistanceRow& row) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& e : row.entries) m = std::max(m, e.distance);
  return m;
}

// log sum_j exp(d_j), shifted by the max for overflow safety.
inline double log_sum_exp(const DistanceRow& row) {
  const double m = max_distance(row);
  double s = 0.0;
  for (const auto& e : row.entries) s += std::exp(e.distance - m);
  return m + std::log(s);
}

// The gradient of d_j with respect to w_i is (w_i - w_j) / (scale^2 * d_j),
// where scale is tau (times sqrt(dim) when distances are normalized).
inline double effective_scale(const ModelPool& pool, const ServerHyper& hyper) {
  double s = hyper.tau;
  if (hyper.normalize_by_sqrt_dim && pool.dim() > 0) s *= std::sqrt(static_cast<double>(pool.dim()));
  return s;
}

struct PairCoefficient {
  std::size_t position;
  ClientId other;
  double xi;
  double coefficient;  // xi / (scale^2 d_j), zero when guarded
  bool guarded;
};

inline std::vector<PairCoefficient> pair_coefficients(const ModelPool& pool, ClientId center,
                                                      const ServerHyper& hyper) {
  hyper.validate();
  const DistanceRow row = distance_row(pool, center, hyper.distance_options());
  const double inv_m = 1.0 / static_cast<double>(row.entries.size());
  const double lse = log_sum_exp(row);
  const double scale = effective_scale(pool, hyper);
  std::vector<PairCoefficient> out;
  out.reserve(row.entries.size());
  for (const auto& e : row.entries) {
    const double p = std::exp(e.distance - lse);
    const double xi = inv_m - p;
    const bool guarded = e.distance < hyper.epsilon_dist;
    const double coef = guarded ? 0.0 : xi / (scale * scale * e.distance);
    out.push_back({e.position, e.other, xi, coef, guarded});
  }
  return out;
}

}  // namespace detail

struct Probability {
  ClientId other;
  double value = 0.0;
};

[[nodiscard]] inline std::vector<Probability> softmax_over_distances(const DistanceRow& row) {
  if (row.entries.empty()) throw std::invalid_argument("softmax over an empty distance row");
  const double m = detail::max_distance(row);
  std::vector<Probability> out;
  out.reserve(row.entries.size());
  double sum = 0.0;
  for (const auto& e : row.entries) {
    const double v = std::exp(e.distance - m);
    sum += v;
    out.push_back({e.other, v});
  }
  for (auto& p : out) p.value /= sum;
  return out;
}

/// log softmax computed directly, not as log(softmax).
[[nodiscard]] inline std::vector<double> log_softmax_over_distances(const DistanceRow& row) {
  if (row.entries.empty()) throw std::invalid_argument("softmax over an empty distance row");
  const double lse = detail::log_sum_exp(row);
  std::vector<double> out;
  out.reserve(row.entries.size());
  for (const auto& e : row.entries) out.push_back(e.distance - lse);
  return out;
}

[[nodiscard]] inline double model_distance_loss(const ModelPool& pool, ClientId center,
                                                const ServerHyper& hyper) {
  hyper.validate();
  const DistanceRow row = distance_row(pool, center, hyper.distance_options());
  if (row.entries.size() == 1) return 0.0;
  CompensatedSum acc;
  for (double lp : log_softmax_over_distances(row)) acc.add(lp);
  return acc.value() / static_cast<double>(row.entries.size());
}

[[nodiscard]] inline ParamVector model_distance_grad(const ModelPool& pool, ClientId center,
                                                     const ServerHyper& hyper) {
  const auto coefs = detail::pair_coefficients(pool, center, hyper);
  const auto& wi = pool[pool.position_of(center)].params;
  ParamVector grad(wi.dim());
  for (const auto& c : coefs) {
    if (c.coefficient == 0.0) continue;
    const auto& wj = pool[c.position].params;
    for (std::size_t k = 0; k < grad.dim(); ++k) grad[k] += c.coefficient * (wi[k] - wj[k]);
  }
  return grad;
}

/// One gradient-descent step on the distance loss: the anchor z_i.
[[nodiscard]] inline ParamVector server_step(const ModelPool& pool, ClientId center,
                                             const ServerHyper& hyper) {
  const ParamVector grad = model_distance_grad(pool, center, hyper);
  ParamVector z = pool[pool.position_of(center)].params;
  for (std::size_t k = 0; k < z.dim(); ++k) z[k] -= hyper.alpha_t * grad[k];
  return z;
}

[[nodiscard]] inline CombinationWeights combination_weights(const ModelPool& pool, ClientId center,
                                                            const ServerHyper& hyper) {
  const auto coefs = detail::pair_coefficients(pool, center, hyper);
  CombinationWeights w{center, 1.0, {}};
  w.betas.reserve(coefs.size());
  CompensatedSum others;
  for (const auto& c : coefs) {
    const double beta = hyper.alpha_t * c.coefficient;
    others.add(beta);
    w.betas.push_back({c.other, beta});
  }
  w.beta_self = 1.0 - others.value();
  return w;
}

/// sum of beta * w over the pool.
[[nodiscard]] inline ParamVector apply_weights(const ModelPool& pool, const CombinationWeights& w) {
  const auto& wi = pool[pool.position_of(w.center)].params;
  ParamVector z(wi.dim());
  for (std::size_t k = 0; k < z.dim(); ++k) z[k] = w.beta_self * wi[k];
  for (const auto& b : w.betas) {
    if (b.value == 0.0) continue;
    const auto& wj = pool[pool.position_of(b.other)].params;
    for (std::size_t k = 0; k < z.dim(); ++k) z[k] += b.value * wj[k];
  }
  return z;
}

inline constexpr double kNeutralBeta = 1e-12;

[[nodiscard]] inline std::vector<PairRelation> sign_rule_check(const ModelPool& pool, ClientId center,
                                                               const ServerHyper& hyper) {
  const auto coefs = detail::pair_coefficients(pool, center, hyper);
  std::vector<PairRelation> out;
  out.reserve(coefs.size());
  for (const auto& c : coefs) {
    const double beta = hyper.alpha_t * c.coefficient;
    Relation r = Relation::neutral;
    if (!c.guarded && std::abs(beta) >= kNeutralBeta) r = beta > 0.0 ? Relation::attract : Relation::repel;
    out.push_back({c.other, r, beta, c.guarded});
  }
  return out;
}

[[nodiscard]] inline const char* to_string(Relation r) noexcept {
  switch (r) {
    case Relation::attract: return "attract";
    case Relation::repel: return "repel";
    case Relation::neutral: return "neutral";
  }
  return "?";
}

}  // namespace diversifed
