#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srlab/dataset.hpp"
#include "srlab/model.hpp"
#include "srlab/records.hpp"
#include "srlab/trace.hpp"

namespace srlab {

// Four pairwise-disjoint quarters of one dataset. The target half and the
// shadow half have equal size; inside each half members and non-members do too.
struct MembershipSplit {
  std::vector<std::size_t> target_train;
  std::vector<std::size_t> target_test;
  std::vector<std::size_t> shadow_train;
  std::vector<std::size_t> shadow_test;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
};

// Seeded permutation of [0, n) cut into quarters. Samples beyond the largest
// multiple of 4 are dropped and reported in `warnings`.
MembershipSplit make_split(std::size_t n, std::uint64_t seed);

struct AttackScore {
  std::size_t sample_id = 0;
  double score = 0.0;  // higher means more member-like
  bool is_member = false;
};

// sum p ln p (negative entropy); 0 ln 0 = 0.
double entropy_score(std::span<const double> probs);

// Negated modified entropy:
//   Mentr(p, y) = -(1 - p_y) ln p_y - sum_{i != y} p_i ln(1 - p_i)
// with logs clamped below at ln(1e-12).
double mentropy_score(std::span<const double> probs, int label);

inline constexpr double kLogClamp = 1e-12;

// -|d CE(F(x), y) / dx|_2 per row. The model must be in Eval mode.
std::vector<double> gradx_l2_scores(const Model& model, const Matrix& features,
                                    std::span<const int> labels);
double gradx_l2_score(const Model& model, std::span<const double> x, int label);

// Mann-Whitney AUC: fraction of (member, non-member) pairs where the member
// scores higher, ties counting one half.
double auc(std::span<const AttackScore> scores);
double auc(std::span<const double> member_scores, std::span<const double> nonmember_scores);

struct AttackerOptions {
  std::size_t epochs = 80;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double dropout = 0.2;
  std::size_t max_features = 100;
  friend bool operator==(const AttackerOptions&, const AttackerOptions&) = default;
};

// Attack model: Dense(in,128)-ReLU-Dropout-Dense(128,64)-ReLU-Dropout-
// Dense(64,64)-ReLU-Dropout-Dense(64,1).
struct AttackerNet {
  Model model;
  std::size_t feature_dim = 0;
};

// Softmax vector sorted in descending order, truncated to `cap` entries and
// zero-padded when shorter.
std::vector<double> attacker_features(std::span<const double> probs, std::size_t cap);

AttackerNet train_nn_attacker(std::span<const PredictionRecord> shadow_records, std::uint64_t seed,
                              const AttackerOptions& options = {});

// Membership logits, one per record.
std::vector<double> attacker_scores(const AttackerNet& net,
                                    std::span<const PredictionRecord> records);

struct AttackOptions {
  AttackerOptions attacker;
  // Subtract the shadow per-class mean from metric scores before ranking.
  bool standardize_per_class = false;
};

struct AttackResult {
  AttackKind kind = AttackKind::NN;
  std::vector<AttackScore> scores;  // target members and non-members
  double auc = 0.5;
  double threshold = 0.0;  // fitted on shadow scores; score > threshold => member
};

struct AttackReport {
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::array<AttackResult, kNumAttacks> attacks;
  std::vector<PredictionRecord> target_records;
  std::vector<PredictionRecord> shadow_records;

  const AttackResult& result(AttackKind kind) const {
    return attacks[static_cast<std::size_t>(kind)];
  }
};

// Throws ContractError unless the two models share architecture and
// training configuration.
void check_adaptive_contract(const Model& target, const Model& shadow);

// Fits every attack on the shadow half (shadow_train = members,
// shadow_test = non-members), then scores target_train against target_test.
// Dataset access goes through `trace` under the stages "fit_attack" and
// "attack_eval"; the target half is only read in the latter.
AttackReport run_attack_suite(const Model& target, const Model& shadow,
                              const MembershipSplit& split, const TabularDataset& dataset,
                              const AttackOptions& options, std::uint64_t seed,
                              AccessTrace* trace = nullptr);

}  // namespace srlab
