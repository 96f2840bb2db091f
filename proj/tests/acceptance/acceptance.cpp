// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   acceptance            run all
//   acceptance --only N   run criterion N
//
// Criterion 9 reads Fashion-MNIST IDX files from $DIVERSIFED_FMNIST_DIR
// (default ./data/fmnist) and is skipped when they are missing.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "diversifed/diversifed.hpp"

using namespace diversifed;

namespace {

enum class Outcome { pass, fail, skip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Verdict verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

MeanStd best_over_seeds(RunConfig cfg, std::size_t seeds) {
  std::vector<double> best;
  for (std::size_t s = 0; s < seeds; ++s) {
    cfg.seed = s;
    best.push_back(run(cfg).best_mean_accuracy);
  }
  return mean_std(best);
}

bool same_report(const RunReport& a, const RunReport& b) {
  if (a.rounds.size() != b.rounds.size()) return false;
  for (std::size_t t = 0; t < a.rounds.size(); ++t) {
    const auto &x = a.rounds[t], &y = b.rounds[t];
    if (x.accuracy != y.accuracy || x.mean_accuracy != y.mean_accuracy) return false;
    if (x.train_loss.size() != y.train_loss.size()) return false;
    for (std::size_t i = 0; i < x.train_loss.size(); ++i) {
      const bool both_nan = std::isnan(x.train_loss[i]) && std::isnan(y.train_loss[i]);
      if (!both_nan && x.train_loss[i] != y.train_loss[i]) return false;
    }
  }
  return a.best_mean_accuracy == b.best_mean_accuracy && a.best_round == b.best_round &&
         a.per_client_best == b.per_client_best && a.final_models == b.final_models;
}

// ---------------------------------------------------------------------------

Verdict criterion_1() {
  Stopwatch sw;
  const auto suites = weight_identity_suite(1000, 1, {1e-9, 1e-9});
  const double t = sw.seconds();
  bool ok = t < 10.0;
  std::string detail;
  for (const auto& s : suites) {
    ok = ok && s.passed();
    detail += describe(s) + "; ";
  }
  return verdict(ok, detail + fmt("%.2fs (limit 10s)", t));
}

Verdict criterion_2() {
  Stopwatch sw;
  const auto dist = distance_grad_suite(100, 1, 1e-5, 1e-5);
  const auto ce = cross_entropy_grad_suite(100, 1, 1e-5, 1e-5);
  const double t = sw.seconds();
  const bool ok = dist.passed() && ce.passed() && dist.worst < 1e-5 && ce.worst < 1e-5 && t < 30.0;
  return verdict(ok, describe(dist) + "; " + describe(ce) + "; " + fmt("%.2fs (limit 30s)", t));
}

Verdict criterion_3() {
  ModelPool pool;
  pool.add(ClientId{0}, {0.0, 0.0});
  pool.add(ClientId{1}, {1.0, 0.0});
  pool.add(ClientId{2}, {0.0, 2.0});
  ServerHyper hyper;
  hyper.tau = 1.0;
  hyper.alpha_t = 1.0;
  const double tol = 1e-4;
  const double loss = model_distance_loss(pool, ClientId{0}, hyper);
  const auto grad = model_distance_grad(pool, ClientId{0}, hyper);
  const auto w = combination_weights(pool, ClientId{0}, hyper);
  double err = std::abs(loss - (-0.81326));
  err = std::max(err, std::abs(grad[0] - (-0.23106)));
  err = std::max(err, std::abs(grad[1] - 0.23106));
  err = std::max(err, std::abs(w.beta_self - 0.88447));
  bool ok = w.betas.size() == 2;
  if (ok) {
    err = std::max(err, std::abs(w.betas[0].value - 0.23106));
    err = std::max(err, std::abs(w.betas[1].value - (-0.11553)));
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "L_d=%.5f grad=(%.5f, %.5f) beta_self=%.5f max error %.2g (tol 1e-4)", loss, grad[0],
                grad[1], w.beta_self, err);
  return verdict(ok && err < tol, buf);
}

RunConfig toy_config() {
  RunConfig cfg;
  cfg.method = Method::toy_pullpush;
  cfg.n_clients = 5;
  cfg.rounds = 50;
  cfg.client.epochs = 5;
  cfg.partition.scheme = Scheme::pathological;
  cfg.partition.classes_per_client = 2;
  cfg.dataset.blobs = {10, 2000, 20, 3.0, 2.0, 0};
  return cfg;
}

Verdict criterion_4() {
  Stopwatch sw;
  const std::vector<double> lambdas{-0.1, 0.0, 0.1};
  std::vector<MeanStd> res;
  for (double lam : lambdas) {
    auto cfg = toy_config();
    cfg.toy_lambda = lam;
    res.push_back(best_over_seeds(cfg, 10));
  }
  const double t = sw.seconds();
  // A gap is significant when it exceeds the larger seed std of the two.
  auto significant = [](const MeanStd& hi, const MeanStd& lo) { return hi.mean - lo.mean > std::max(hi.std, lo.std); };
  const bool ok = significant(res[0], res[1]) && significant(res[1], res[2]) && t < 300.0;
  std::string detail;
  for (std::size_t k = 0; k < lambdas.size(); ++k)
    detail += fmt("lambda=%g: ", lambdas[k]) + format_mean_std(res[k]) + "; ";
  return verdict(ok, detail + fmt("%.1fs (limit 300s)", t));
}

RunConfig baseline_config(Method m) {
  RunConfig cfg;
  cfg.method = m;
  cfg.n_clients = 10;
  cfg.rounds = 50;
  cfg.partition.scheme = Scheme::pathological;
  cfg.partition.classes_per_client = 2;
  cfg.dataset.blobs = {10, 2000, 20, 3.0, 2.0, 0};
  cfg.client.lambda = 2.0;
  cfg.server.tau = 1.0;
  return cfg;
}

Verdict criterion_5() {
  Stopwatch sw;
  const auto div = best_over_seeds(baseline_config(Method::diversifed), 5);
  const auto sep = best_over_seeds(baseline_config(Method::separate), 5);
  const auto avg = best_over_seeds(baseline_config(Method::fedavg), 5);
  const double t = sw.seconds();
  const bool ok = div.mean - sep.mean >= 0.01 && sep.mean - avg.mean >= 0.05 && t < 600.0;
  return verdict(ok, "DiversiFed " + format_mean_std(div) + ", Separate " + format_mean_std(sep) + ", FedAvg " +
                         format_mean_std(avg) + fmt("; %.1fs (limit 600s)", t));
}

Verdict criterion_6() {
  RunConfig base;
  base.n_clients = 4;
  base.rounds = 5;
  base.client.epochs = 2;
  base.client.batch_size = 25;
  base.hidden = {16};
  base.dataset.blobs = {10, 200, 8, 3.0, 2.0, 0};
  base.partition.train_per_client = 60;
  base.partition.test_per_client = 20;

  auto separate = [&](std::size_t n) {
    auto c = base;
    c.n_clients = n;
    c.method = Method::separate;
    return run(c);
  };
  auto zero_lambda = base;
  zero_lambda.method = Method::diversifed;
  zero_lambda.client.lambda = 0.0;
  auto two = base;
  two.method = Method::diversifed;
  two.n_clients = 2;
  auto toy = base;
  toy.method = Method::toy_pullpush;
  toy.toy_lambda = 0.0;

  const bool a = same_report(run(zero_lambda), separate(4));
  const bool b = same_report(run(two), separate(2));
  const bool c = same_report(run(toy), separate(4));
  auto word = [](bool x) { return x ? "identical" : "DIFFERENT"; };
  return verdict(a && b && c, std::string("DiversiFed(lambda=0) vs Separate: ") + word(a) +
                                  "; DiversiFed(N=2) vs Separate: " + word(b) +
                                  "; toy_pullpush(lambda=0) vs Separate: " + word(c));
}

Verdict criterion_7() {
  Stopwatch sw;
  const auto full = best_over_seeds(baseline_config(Method::diversifed), 5);
  auto half_cfg = baseline_config(Method::diversifed);
  half_cfg.participation_fraction = 0.5;
  const auto half = best_over_seeds(half_cfg, 5);
  const double t = sw.seconds();
  const double drop = full.mean - half.mean;
  return verdict(drop < 0.03 && t < 600.0, "full " + format_mean_std(full) + ", 50% " + format_mean_std(half) +
                                              fmt(", drop %.2f points (limit 3)", 100.0 * drop) +
                                              fmt("; %.1fs (limit 600s)", t));
}

Verdict criterion_8() {
  BlobSpec spec{10, 2000, 8, 3.0, 1.0, 0};
  const auto ds = synth_blobs(spec);
  std::string detail;
  bool ok = true;

  const auto patho = partition_pathological(ds, 40, 2, 300, 100, 3);
  std::vector<std::size_t> holders(10, 0);
  for (const auto& c : patho.clients) {
    std::vector<std::size_t> labels;
    for (auto i : c.train) labels.push_back(ds.labels[i]);
    const auto h = label_histogram(labels, 10);
    for (std::size_t k = 0; k < 10; ++k) holders[k] += h[k] > 0;
  }
  bool patho_ok = true;
  for (auto h : holders) patho_ok = patho_ok && h == 8;
  detail += std::string("pathological: every class on 8 clients ") + (patho_ok ? "yes" : "NO") + "; ";

  const auto dir = partition_dirichlet(ds, 40, 1e6, 300, 100, 3);
  double dev = 0.0;
  for (const auto& c : dir.clients) {
    std::vector<std::size_t> labels;
    for (auto i : c.train) labels.push_back(ds.labels[i]);
    const auto h = label_histogram(labels, 10);
    for (auto n : h) dev = std::max(dev, std::abs(static_cast<double>(n) / 300.0 - 0.1));
  }
  const bool dir_ok = dev <= 0.02;
  detail += fmt("dirichlet(1e6): max deviation %.4f (limit 0.02); ", dev);

  PracticalLayout layout;
  layout.n_groups = 3;
  const auto prac = partition_practical(ds, 20, layout, 300, 100, 3);
  const auto sizes = practical_group_sizes(20, 3);
  bool prac_ok = sizes == std::vector<std::size_t>{6, 6, 8};
  double worst_share = 0.0;
  for (const auto& c : prac.clients) {
    const auto g = practical_group_of(c.id.value, 20, 3);
    std::size_t dominant = 0;
    for (auto i : c.train) {
      const auto y = ds.labels[i];
      dominant += y >= g * layout.dominant_classes_per_group && y < (g + 1) * layout.dominant_classes_per_group;
    }
    const double off = std::abs(static_cast<double>(dominant) / 300.0 - 0.8);
    worst_share = std::max(worst_share, off);
  }
  prac_ok = prac_ok && worst_share <= 1.0 / 300.0 + 1e-12;
  detail += fmt("practical: groups 6/6/8, dominant share off by at most %.4f (limit 1/300); ", worst_share);

  const bool det = to_json(partition_pathological(ds, 40, 2, 300, 100, 3)) == to_json(patho) &&
                   to_json(partition_dirichlet(ds, 40, 1e6, 300, 100, 3)) == to_json(dir) &&
                   to_json(partition_practical(ds, 20, layout, 300, 100, 3)) == to_json(prac);
  detail += std::string("deterministic ") + (det ? "yes" : "NO");
  ok = patho_ok && dir_ok && prac_ok && det;
  return verdict(ok, detail);
}

Verdict criterion_9() {
  namespace fs = std::filesystem;
  const char* env = std::getenv("DIVERSIFED_FMNIST_DIR");
  const fs::path dir = env ? env : "data/fmnist";
  const fs::path files[4] = {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
                             dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
  for (const auto& f : files)
    if (!fs::exists(f)) return {Outcome::skip, "Fashion-MNIST IDX files not found under " + dir.string()};

  Stopwatch sw;
  auto cfg = baseline_config(Method::diversifed);
  cfg.rounds = 100;
  cfg.dataset.kind = DatasetKind::idx;
  cfg.dataset.train_images = files[0].string();
  cfg.dataset.train_labels = files[1].string();
  cfg.dataset.test_images = files[2].string();
  cfg.dataset.test_labels = files[3].string();
  const auto div = run(cfg).best_mean_accuracy;
  cfg.method = Method::separate;
  const auto sep = run(cfg).best_mean_accuracy;
  const double t = sw.seconds();
  char buf[160];
  std::snprintf(buf, sizeof buf, "DiversiFed %.4f, Separate %.4f (both >= 0.90); %.1fs (limit 1800s)", div, sep, t);
  return verdict(div >= sep && sep >= 0.90 && t < 1800.0, buf);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria{criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                                       criterion_6, criterion_7, criterion_8, criterion_9};
  std::size_t only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::strtoul(argv[++i], nullptr, 10);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  if (only > criteria.size()) {
    std::fprintf(stderr, "no criterion %zu\n", only);
    return 2;
  }

  bool failed = false, skipped = false;
  for (std::size_t n = 1; n <= criteria.size(); ++n) {
    if (only != 0 && n != only) continue;
    Verdict v{Outcome::fail, ""};
    try {
      v = criteria[n - 1]();
    } catch (const std::exception& e) {
      v = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = v.outcome == Outcome::pass ? "PASS" : v.outcome == Outcome::fail ? "FAIL" : "SKIP";
    std::printf("%s criterion %zu: %s\n", tag, n, v.detail.c_str());
    std::fflush(stdout);
    failed = failed || v.outcome == Outcome::fail;
    skipped = skipped || v.outcome == Outcome::skip;
  }
  if (failed) return 1;
  return skipped && only != 0 ? 77 : 0;
}
