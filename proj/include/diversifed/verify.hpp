#pragma once

// Self-checks: central finite differences for both gradients and the
// combination-weight identities of the server step over random pools.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "diversifed/distance_core.hpp"
#include "diversifed/neural.hpp"
#include "diversifed/rng.hpp"

namespace diversifed {

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // largest observed error
  std::string first_failure;

  [[nodiscard]] bool passed() const noexcept { return cases > 0 && failures == 0; }

  void record(double err, double tol, const std::string& what) {
    worst = std::max(worst, err);
    if (!(err <= tol)) {
      if (failures == 0) first_failure = what;
      ++failures;
    }
  }
};

struct IdentityTolerances {
  double weight_sum = 1e-9;
  double combination = 1e-9;
};

/// Random pools: n in [3, 10], dim in [5, 100], tau in [0.5, 1.1], alpha_t in
/// {0.5, 1}. Checks sum(beta) == 1, server_step == sum(beta * w), and that each
/// unguarded pair attracts exactly when its softmax weight is below 1/M.
[[nodiscard]] inline std::vector<SuiteResult> weight_identity_suite(std::size_t pools, std::uint64_t seed,
                                                                   IdentityTolerances tol = {}) {
  SuiteResult sums{"weights sum to one"}, combo{"server step equals weighted combination"},
      signs{"sign rule matches softmax comparison"};
  Engine rng = make_engine({seed, 0x1d});
  std::uniform_int_distribution<std::size_t> n_dist(3, 10), dim_dist(5, 100);
  std::uniform_real_distribution<double> tau_dist(0.5, 1.1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t p = 0; p < pools; ++p) {
    const std::size_t n = n_dist(rng), dim = dim_dist(rng);
    ServerHyper hyper;
    hyper.tau = tau_dist(rng);
    hyper.alpha_t = rng() % 2 == 0 ? 0.5 : 1.0;
    const double scale = 0.05 + std::abs(g(rng));
    ModelPool pool;
    for (std::size_t i = 0; i < n; ++i) {
      ParamVector w(dim);
      for (auto& x : w) x = scale * g(rng);
      pool.add(ClientId{i}, std::move(w));
    }
    const ClientId center{p % n};
    const std::string tag = "pool " + std::to_string(p);

    const auto weights = combination_weights(pool, center, hyper);
    ++sums.cases;
    sums.record(std::abs(weights.total() - 1.0), tol.weight_sum, tag);

    const auto z = server_step(pool, center, hyper);
    const auto zc = apply_weights(pool, weights);
    double worst = 0.0;
    for (std::size_t k = 0; k < dim; ++k) worst = std::max(worst, std::abs(z[k] - zc[k]));
    ++combo.cases;
    combo.record(worst, tol.combination, tag);

    const auto probs = softmax_over_distances(distance_row(pool, center, hyper.distance_options()));
    const auto rel = sign_rule_check(pool, center, hyper);
    const double uniform = 1.0 / static_cast<double>(probs.size());
    for (std::size_t j = 0; j < rel.size(); ++j) {
      if (rel[j].guarded) continue;
      const Relation expected = probs[j].value < uniform ? Relation::attract : Relation::repel;
      ++signs.cases;
      signs.record(rel[j].relation == expected ? 0.0 : 1.0, 0.0,
                   tag + " pair " + std::to_string(j) + ": " + to_string(rel[j].relation));
    }
  }
  return {sums, combo, signs};
}

/// Norm-wise relative error ||a - b|| / max(||b||, floor).
[[nodiscard]] inline double relative_error(const ParamVector& a, const ParamVector& b, double floor = 1e-12) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

template <class F>
[[nodiscard]] ParamVector central_difference(F&& f, ParamVector x, double h) {
  ParamVector g(x.dim());
  for (std::size_t k = 0; k < x.dim(); ++k) {
    const double orig = x[k];
    x[k] = orig + h;
    const double up = f(x);
    x[k] = orig - h;
    const double down = f(x);
    x[k] = orig;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

[[nodiscard]] inline SuiteResult distance_grad_suite(std::size_t instances, std::uint64_t seed, double rel_tol = 1e-5,
                                                     double h = 1e-5) {
  SuiteResult res{"distance loss gradient vs finite differences"};
  Engine rng = make_engine({seed, 0x2d});
  std::uniform_int_distribution<std::size_t> n_dist(3, 8), dim_dist(2, 12);
  std::uniform_real_distribution<double> tau_dist(0.5, 1.1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t n = n_dist(rng), dim = dim_dist(rng);
    ServerHyper hyper;
    hyper.tau = tau_dist(rng);
    std::vector<ParamVector> models;
    for (std::size_t i = 0; i < n; ++i) {
      ParamVector w(dim);
      for (auto& x : w) x = g(rng);
      models.push_back(std::move(w));
    }
    auto loss_at = [&](const ParamVector& w0) {
      ModelPool pool;
      pool.add(ClientId{0}, w0);
      for (std::size_t i = 1; i < n; ++i) pool.add(ClientId{i}, models[i]);
      return model_distance_loss(pool, ClientId{0}, hyper);
    };
    ModelPool pool;
    for (std::size_t i = 0; i < n; ++i) pool.add(ClientId{i}, models[i]);
    const auto analytic = model_distance_grad(pool, ClientId{0}, hyper);
    const auto numeric = central_difference(loss_at, models[0], h);
    ++res.cases;
    res.record(relative_error(analytic, numeric), rel_tol, "instance " + std::to_string(t));
  }
  return res;
}

namespace detail {

// Smallest |pre-activation| of any hidden unit on the batch.
inline double min_abs_preactivation(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
  const auto layers = unflatten(params, spec.layer_shapes());
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto x = batch.inputs.row(s);
    std::vector<double> a(x.begin(), x.end());
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
      const auto& L = layers[l];
      std::vector<double> out(L.rows);
      for (std::size_t j = 0; j < L.rows; ++j) {
        double v = L.bias[j];
        for (std::size_t k = 0; k < L.cols; ++k) v += L.weights[j * L.cols + k] * a[k];
        m = std::min(m, std::abs(v));
        out[j] = std::max(v, 0.0);
      }
      a = std::move(out);
    }
  }
  return m;
}

}  // namespace detail

/// Random small MLPs and batches. Instances with a hidden pre-activation
/// within `kink_margin` of zero are redrawn, since the finite difference
/// would straddle a ReLU kink there.
[[nodiscard]] inline SuiteResult cross_entropy_grad_suite(std::size_t instances, std::uint64_t seed,
                                                          double rel_tol = 1e-5, double h = 1e-5,
                                                          double kink_margin = 1e-3) {
  SuiteResult res{"cross-entropy gradient vs finite differences"};
  Engine rng = make_engine({seed, 0x3d});
  std::uniform_int_distribution<std::size_t> size_dist(2, 6), batch_dist(1, 8);
  std::normal_distribution<double> g(0.0, 1.0);
  while (res.cases < instances) {
    MlpSpec spec;
    const std::size_t depth = 1 + rng() % 3;
    for (std::size_t l = 0; l <= depth; ++l) spec.layer_sizes.push_back(size_dist(rng));
    ParamVector params(spec.num_params());
    for (auto& x : params) x = 0.7 * g(rng);
    Batch batch;
    const std::size_t n = batch_dist(rng);
    batch.inputs = Matrix(n, spec.input_dim());
    for (auto& x : batch.inputs.data) x = g(rng);
    for (std::size_t s = 0; s < n; ++s) batch.labels.push_back(rng() % spec.num_classes());
    if (detail::min_abs_preactivation(params, spec, batch) < kink_margin) continue;

    const auto analytic = cross_entropy_loss_and_grad(params, spec, batch).grad;
    const auto numeric = central_difference(
        [&](const ParamVector& p) { return cross_entropy_loss_and_grad(p, spec, batch).loss; }, params, h);
    ++res.cases;
    res.record(relative_error(analytic, numeric), rel_tol, "instance " + std::to_string(res.cases - 1));
  }
  return res;
}

[[nodiscard]] inline std::string describe(const SuiteResult& r) {
  std::ostringstream os;
  os << (r.passed() ? "PASS" : "FAIL") << "  " << r.name << ": " << r.cases - r.failures << "/" << r.cases
     << " ok, worst error " << r.worst;
  if (!r.passed() && !r.first_failure.empty()) os << " (first failure: " << r.first_failure << ")";
  return os.str();
}

}  // namespace diversifed
