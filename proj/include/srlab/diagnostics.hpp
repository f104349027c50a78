#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srlab/model.hpp"
#include "srlab/records.hpp"

namespace srlab {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average ranks (ties share their mean rank).
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// Magnitude x margin histogram with the mean per-sample attack correctness of
// each cell. Cell (i, j) covers magnitude bin i and margin bin j.
struct BinTable {
  std::vector<double> magnitude_edges;  // bins + 1 ascending edges
  std::vector<double> margin_edges;
  std::vector<std::size_t> counts;      // row-major, magnitude-major
  std::vector<double> attack_accuracy;  // 0 for empty cells

  std::size_t magnitude_bins() const { return magnitude_edges.size() - 1; }
  std::size_t margin_bins() const { return margin_edges.size() - 1; }
  std::size_t count(std::size_t i, std::size_t j) const { return counts[i * margin_bins() + j]; }
  double accuracy(std::size_t i, std::size_t j) const {
    return attack_accuracy[i * margin_bins() + j];
  }
  std::size_t total() const;
};

struct MagnitudeMarginTables {
  BinTable member;
  BinTable non_member;
  std::optional<double> pearson_member;
  std::optional<double> pearson_non_member;
  bool magnitude_after_projection = false;
  AttackKind accuracy_source = AttackKind::MEntropy;
  std::vector<std::string> warnings;
};

// Equal-width bins over the range observed across all records, shared by the
// member and non-member tables. A degenerate range collapses to one bin.
MagnitudeMarginTables magnitude_margin_table(std::span<const PredictionRecord> records,
                                             std::size_t magnitude_bins, std::size_t margin_bins,
                                             bool magnitude_after_projection,
                                             AttackKind accuracy_source = AttackKind::MEntropy);

// CSV with header mag_lo,mag_hi,margin_lo,margin_hi,count,attack_acc.
std::string to_csv(const BinTable& table);

struct LatencyStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  std::size_t iters = 0;
};

// Wall-clock timing of Eval-mode forward passes; runs on the calling thread.
LatencyStats latency_bench(const Model& model, const Matrix& batch, std::size_t iters,
                           std::size_t warmup);

}  // namespace srlab
