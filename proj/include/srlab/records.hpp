#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srlab/dataset.hpp"
#include "srlab/model.hpp"

namespace srlab {

enum class AttackKind { NN = 0, Entropy = 1, MEntropy = 2, GradX = 3 };
inline constexpr std::array<AttackKind, 4> kAttackKinds = {
    AttackKind::NN, AttackKind::Entropy, AttackKind::MEntropy, AttackKind::GradX};
inline constexpr std::size_t kNumAttacks = kAttackKinds.size();

std::string to_string(AttackKind kind);

// Per-sample view of a model's prediction, used both for fitting attacks on
// the shadow model and for diagnosing the target.
struct PredictionRecord {
  std::size_t sample_id = 0;  // row in the full dataset
  std::vector<double> probs;
  int label = 0;
  bool is_member = false;
  double magnitude = 0.0;  // |g|_2 at the model's bottleneck
  double margin = 0.0;     // top-1 minus top-2 probability
  std::array<double, kNumAttacks> scores{};
  std::array<bool, kNumAttacks> attack_correct{};
};

// Top-1 minus top-2 probability. Throws InputError for fewer than 2 classes.
double margin(std::span<const double> probs);

// Runs `model` (Eval mode) over `data` and fills probs, magnitude and margin.
// `ids` are the dataset row ids of `data`.
std::vector<PredictionRecord> collect_records(const Model& model, const TabularDataset& data,
                                              std::span<const std::size_t> ids, bool is_member,
                                              std::size_t batch = 512);

}  // namespace srlab
