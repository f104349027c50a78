#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srlab/attacks.hpp"
#include "srlab/config.hpp"
#include "srlab/diagnostics.hpp"
#include "srlab/model.hpp"
#include "srlab/trace.hpp"
#include "srlab/train.hpp"

namespace srlab {

// Table-3 style metrics of one run.
struct Metrics {
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::array<double, kNumAttacks> auc{};
  double auc_of(AttackKind kind) const { return auc[static_cast<std::size_t>(kind)]; }
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct SeedResult {
  std::uint64_t seed = 0;
  Metrics metrics;
  std::size_t members = 0;
  std::size_t non_members = 0;
  std::size_t holdout = 0;  // target members reserved for early stopping
  std::size_t target_epochs = 0;
  std::size_t shadow_epochs = 0;
  std::optional<std::size_t> target_best_epoch;
  std::optional<double> pearson_member;
  std::optional<double> pearson_non_member;
  friend bool operator==(const SeedResult&, const SeedResult&) = default;
};

// Shell volume statistic for heads with an SR layer.
struct CapacityInfo {
  std::size_t dim = 0;
  double r1 = 0.0;
  double d = 0.0;
  std::optional<double> proxy;  // empty when it overflows a double
  double log_proxy = 0.0;
  friend bool operator==(const CapacityInfo&, const CapacityInfo&) = default;
};

// Everything written to report.txt.
struct ReportSummary {
  ExperimentConfig config;
  std::string dataset_digest;
  std::string dataset_provenance;
  std::size_t dataset_rows = 0;
  std::optional<CapacityInfo> capacity;
  bool magnitude_after_projection = false;
  std::vector<SeedResult> seeds;
  Metrics mean;
  std::vector<std::string> warnings;
  friend bool operator==(const ReportSummary&, const ReportSummary&) = default;
};

struct SeedArtifacts {
  TrainLog target_log;
  TrainLog shadow_log;
  MagnitudeMarginTables tables;
  std::optional<Model> target;
  std::optional<Model> shadow;
};

struct ExperimentReport {
  ReportSummary summary;
  std::vector<SeedArtifacts> artifacts;  // parallel to summary.seeds
  MagnitudeMarginTables mean_tables;     // pooled over all seeds
};

// Membership assignment of one seed: the attack split plus the member rows
// held back as early-stopping monitors (empty without early stopping).
struct MembershipPlan {
  MembershipSplit split;
  std::vector<std::size_t> target_monitor;
  std::vector<std::size_t> shadow_monitor;
};

TabularDataset load_dataset(const ExperimentConfig& cfg);
MembershipPlan plan_membership(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed);
std::optional<CapacityInfo> capacity_info(const ExperimentConfig& cfg);

// Fresh model for `cfg` with its training tag set.
Model make_model(const ExperimentConfig& cfg, std::uint64_t seed);

// Split, train target, train shadow (seed + 1), attack, diagnose; once per
// seed in [run.seed, run.seed + run.repeat). Errors carry the failing stage.
ExperimentReport run_experiment(const ExperimentConfig& cfg, AccessTrace* trace = nullptr);
ExperimentReport run_experiment(const ExperimentConfig& cfg, const TabularDataset& dataset,
                                AccessTrace* trace = nullptr);

// Attack and diagnose already-trained models for one seed.
ExperimentReport attack_trained(const ExperimentConfig& cfg, const TabularDataset& dataset,
                                Model target, Model shadow, std::uint64_t seed,
                                AccessTrace* trace = nullptr);

Metrics mean_metrics(std::span<const SeedResult> seeds);

inline constexpr std::string_view kResultsHeader =
    "train_acc,test_acc,auc_nn,auc_entropy,auc_mentropy,auc_gradx";

std::string format_report(const ReportSummary& summary);
ReportSummary parse_report(std::string_view text);
// One row per seed under kResultsHeader.
std::string results_csv(const ReportSummary& summary);
std::string train_log_csv(const TrainLog& log);

// Writes report.txt, resolved.cfg, results.csv, results_mean.csv, per-seed
// training logs, diagnostics tables and (optionally) checkpoints. Output is
// staged next to `dir` and moved into place only when complete.
void emit_report(const ExperimentReport& report, const std::filesystem::path& dir);

struct SweepPoint {
  double r1 = 0.0;
  double d = 0.0;
  ReportSummary summary;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  // Spearman correlation of r1 against each metric, per d.
  std::vector<std::pair<double, std::optional<double>>> train_acc_trend;
  std::vector<std::pair<double, std::optional<double>>> mentropy_trend;
};

// One experiment per (r1, d) grid point, each emitted under
// dir/r1_<r1>_d_<d>, plus sweep.csv and trend.txt in dir.
SweepResult run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& dir);
std::string sweep_csv(const SweepResult& sweep);
std::string trend_summary(const SweepResult& sweep);

// One manifest line of parameter shapes, then little-endian doubles.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
// Overwrites the parameters of `model`, which must have the saved shapes.
void load_checkpoint(Model& model, const std::filesystem::path& path);

}  // namespace srlab
