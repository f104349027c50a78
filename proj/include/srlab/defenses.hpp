#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "srlab/loss.hpp"
#include "srlab/matrix.hpp"

namespace srlab {

using LossFn = std::function<LossResult(const Matrix& logits, std::span<const int> labels)>;

enum class DefenseKind { None, LabelSmoothing, ConfidencePenalty, EarlyStopping };

std::string to_string(DefenseKind kind);
DefenseKind parse_defense_kind(std::string_view name);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::None;
  double epsilon = 0.1;          // label smoothing
  double beta = 0.1;             // confidence penalty
  std::size_t patience = 10;     // early stopping
  double min_delta = 0.0;
  double holdout_fraction = 0.1; // members carved out for early-stopping validation

  void validate() const;
  friend bool operator==(const DefenseConfig&, const DefenseConfig&) = default;
};

// Cross-entropy against (1 - eps) one-hot + eps / C.
LossResult label_smoothing_loss(const Matrix& logits, std::span<const int> labels, double epsilon);

// Cross-entropy minus beta times the prediction entropy.
LossResult confidence_penalty_loss(const Matrix& logits, std::span<const int> labels, double beta);

// Loss used during training for the configured defense.
LossFn make_loss(const DefenseConfig& cfg);

struct EarlyStopDecision {
  bool stop = false;
  std::size_t best_epoch = 0;
  friend bool operator==(const EarlyStopDecision&, const EarlyStopDecision&) = default;
};

// Stops once `patience` consecutive epochs fail to beat the best accuracy so
// far by more than min_delta. best_epoch is the first epoch with the highest
// accuracy.
EarlyStopDecision early_stopping_check(std::span<const double> history, std::size_t patience,
                                       double min_delta);

}  // namespace srlab
