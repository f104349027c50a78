#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srlab/attacks.hpp"
#include "srlab/dataset.hpp"
#include "srlab/defenses.hpp"
#include "srlab/model.hpp"
#include "srlab/srcm.hpp"
#include "srlab/train.hpp"

namespace srlab {

enum class DatasetSource { Synthetic, File };

struct DatasetSpec {
  DatasetSource source = DatasetSource::Synthetic;
  std::filesystem::path path;  // File only
  SyntheticParams synthetic;   // n, flip_prob and seed apply to Synthetic only
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct ModelSpec {
  std::vector<std::size_t> hidden;
  Activation activation = Activation::Tanh;
  double dropout = 0.0;
  HeadDesign head = HeadDesign::Vanilla;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct OptimizerSpec {
  double learning_rate = 0.1;
  double momentum = 0.09;
  double weight_decay = 5e-4;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  LrSchedule schedule = LrSchedule::Step;
  friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

struct RunSpec {
  std::uint64_t seed = 0;
  std::size_t repeat = 1;
  std::filesystem::path out_dir = "out";
  std::vector<double> r1_grid = {0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<double> d_grid = {0.5, 1.0, 2.0};
  std::size_t magnitude_bins = 20;
  std::size_t margin_bins = 20;
  bool save_models = true;
  bool per_class_offsets = false;
  AttackerOptions attacker;
  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  ModelSpec model;
  SrcmConfig srcm;
  DefenseConfig defense;
  OptimizerSpec optimizer;
  RunSpec run;

  std::size_t input_width() const { return dataset.synthetic.dim; }
  std::size_t num_classes() const { return dataset.synthetic.classes; }
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Line-oriented `key = value` text with [dataset] [model] [srcm] [defense]
// [optimizer] [run] sections. `dataset.source` and `model.hidden` are
// required; everything else has a default. Throws ConfigError naming the
// offending key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Every key with its resolved value; parse_config(to_config_text(c)) == c.
std::string to_config_text(const ExperimentConfig& cfg);

// LAB_SEED and LAB_OUT_DIR take precedence over the file.
using EnvLookup = std::function<std::optional<std::string>(const char*)>;
void apply_env_overrides(ExperimentConfig& cfg, const EnvLookup& lookup);
void apply_env_overrides(ExperimentConfig& cfg);

// Cross-field checks; parse_config already runs them.
void validate(const ExperimentConfig& cfg);

MlpSpec mlp_spec(const ExperimentConfig& cfg);
AttackOptions attack_options(const ExperimentConfig& cfg);
TrainOptions train_options(const ExperimentConfig& cfg, std::uint64_t seed);

// Everything that shapes training except the seed and the data half; equal
// tags are what the adaptive attack contract requires.
std::string training_tag(const ExperimentConfig& cfg);

}  // namespace srlab
