#pragma once

// Run outputs: a per-round CSV (header first, one flushed row per round) and
// an end-of-run JSON summary, plus mean/std aggregation over repeated runs.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "diversifed/config.hpp"
#include "diversifed/orchestrator.hpp"

namespace diversifed {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

[[nodiscard]] inline std::string csv_header(std::size_t n_clients) {
  std::string h = "round,mean_acc";
  for (std::size_t i = 0; i < n_clients; ++i) h += ",acc_client_" + std::to_string(i);
  for (std::size_t i = 0; i < n_clients; ++i) h += ",loss_client_" + std::to_string(i);
  return h;
}

[[nodiscard]] inline std::string csv_row(const RoundRecord& r) {
  std::string row = std::to_string(r.round) + "," + detail::fixed6(r.mean_accuracy);
  for (double a : r.accuracy) row += "," + detail::fixed6(a);
  for (double l : r.train_loss) row += "," + detail::fixed6(l);
  return row;
}

/// Per-round CSV writer. The header is written with the first row.
class MetricsSink {
 public:
  MetricsSink() = default;
  explicit MetricsSink(std::string csv_path) : path_(std::move(csv_path)) {}

  [[nodiscard]] bool enabled() const noexcept { return !path_.empty(); }
  [[nodiscard]] std::size_t rows_written() const noexcept { return rows_; }

  void emit_round(const RoundRecord& r) {
    if (!enabled()) return;
    if (!out_.is_open()) {
      out_.open(path_, std::ios::trunc);
      if (!out_) throw IoError("cannot open '" + path_ + "' for writing");
      out_ << csv_header(r.accuracy.size()) << '\n';
    }
    out_ << csv_row(r) << '\n';
    out_.flush();
    if (!out_) throw IoError("write to '" + path_ + "' failed");
    ++rows_;
  }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t rows_ = 0;
};

[[nodiscard]] inline std::vector<RoundRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  std::size_t cols = 1;
  for (char ch : line) cols += ch == ',';
  if (cols < 2 || (cols - 2) % 2 != 0) throw IoError("'" + path + "': malformed header");
  const std::size_t n = (cols - 2) / 2;
  std::vector<RoundRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != cols) throw IoError("'" + path + "': row with " + std::to_string(cells.size()) + " fields");
    RoundRecord r;
    r.round = std::stoul(cells[0]);
    r.mean_accuracy = std::stod(cells[1]);
    for (std::size_t i = 0; i < n; ++i) r.accuracy.push_back(std::stod(cells[2 + i]));
    for (std::size_t i = 0; i < n; ++i) r.train_loss.push_back(std::stod(cells[2 + n + i]));
    out.push_back(std::move(r));
  }
  return out;
}

[[nodiscard]] inline nlohmann::json summary_json(const RunReport& rep) {
  return {{"config", config_to_json(rep.config)},
          {"best_mean_accuracy", rep.best_mean_accuracy},
          {"best_round", rep.best_round},
          {"final_mean_accuracy", rep.final_mean_accuracy},
          {"per_client_best", rep.per_client_best},
          {"seed", rep.config.seed},
          {"wall_clock_seconds", rep.wall_clock_seconds}};
}

inline void emit_summary(const std::string& path, const RunReport& rep) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << summary_json(rep).dump(2) << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t n = 0;
};

[[nodiscard]] inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  m.n = xs.size();
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

/// Aggregates best mean accuracy over several summaries.
[[nodiscard]] inline MeanStd aggregate_best(const std::vector<nlohmann::json>& summaries) {
  std::vector<double> best;
  for (const auto& s : summaries) best.push_back(s.at("best_mean_accuracy").get<double>());
  return mean_std(best);
}

[[nodiscard]] inline std::string format_mean_std(const MeanStd& m, int scale = 100) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f +- %.2f", m.mean * scale, m.std * scale);
  return buf;
}

}  // namespace diversifed
