#include "srlab/defenses.hpp"

#include <cmath>

#include <fmt/format.h>

#include "srlab/errors.hpp"

namespace srlab {

std::string to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::None:
      return "none";
    case DefenseKind::LabelSmoothing:
      return "label_smoothing";
    case DefenseKind::ConfidencePenalty:
      return "confidence_penalty";
    case DefenseKind::EarlyStopping:
      return "early_stopping";
  }
  return "none";
}

DefenseKind parse_defense_kind(std::string_view name) {
  if (name == "none") return DefenseKind::None;
  if (name == "label_smoothing") return DefenseKind::LabelSmoothing;
  if (name == "confidence_penalty") return DefenseKind::ConfidencePenalty;
  if (name == "early_stopping") return DefenseKind::EarlyStopping;
  throw ConfigError(fmt::format("defense.kind: unknown defense '{}'", name));
}

void DefenseConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("defense.epsilon must lie in [0, 1)");
  if (!(beta >= 0.0)) throw ConfigError("defense.beta must be non-negative");
  if (patience < 1) throw ConfigError("defense.patience must be at least 1");
  if (!(min_delta >= 0.0)) throw ConfigError("defense.min_delta must be non-negative");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("defense.holdout must lie in (0, 1)");
  }
}

LossResult label_smoothing_loss(const Matrix& logits, std::span<const int> labels,
                                double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InputError("label smoothing epsilon outside [0, 1)");
  if (logits.rows() == 0) throw InputError("label_smoothing_loss: empty batch");
  check_labels(labels, logits.rows(), logits.cols());
  const std::size_t classes = logits.cols();
  const double off = epsilon / static_cast<double>(classes);
  const double on = (1.0 - epsilon) + off;
  const double n = static_cast<double>(logits.rows());

  LossResult out;
  out.probs = softmax(logits);
  out.dlogits = out.probs;
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    const double lse = log_sum_exp(z);
    const auto y = static_cast<std::size_t>(labels[r]);
    double row_loss = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double t = c == y ? on : off;
      if (t != 0.0) row_loss += t * (lse - z[c]);
      out.dlogits(r, c) -= t;
    }
    total += row_loss;
  }
  for (double& v : out.dlogits.values()) v /= n;
  out.loss = total / n;
  return out;
}

LossResult confidence_penalty_loss(const Matrix& logits, std::span<const int> labels,
                                   double beta) {
  if (!(beta >= 0.0)) throw InputError("confidence penalty beta must be non-negative");
  LossResult out = softmax_cross_entropy(logits, labels);
  if (beta == 0.0) return out;
  const double n = static_cast<double>(logits.rows());
  double entropy_total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    const auto p = out.probs.row(r);
    const double lse = log_sum_exp(z);
    double h = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) h -= p[c] * (z[c] - lse);
    entropy_total += h;
    // d(-beta H)/dz_c = beta p_c (log p_c + H)
    for (std::size_t c = 0; c < z.size(); ++c) {
      out.dlogits(r, c) += beta * p[c] * ((z[c] - lse) + h) / n;
    }
  }
  out.loss -= beta * entropy_total / n;
  return out;
}

LossFn make_loss(const DefenseConfig& cfg) {
  switch (cfg.kind) {
    case DefenseKind::LabelSmoothing:
      return [eps = cfg.epsilon](const Matrix& z, std::span<const int> y) {
        return label_smoothing_loss(z, y, eps);
      };
    case DefenseKind::ConfidencePenalty:
      return [beta = cfg.beta](const Matrix& z, std::span<const int> y) {
        return confidence_penalty_loss(z, y, beta);
      };
    case DefenseKind::None:
    case DefenseKind::EarlyStopping:
      break;
  }
  return [](const Matrix& z, std::span<const int> y) { return softmax_cross_entropy(z, y); };
}

EarlyStopDecision early_stopping_check(std::span<const double> history, std::size_t patience,
                                       double min_delta) {
  EarlyStopDecision d;
  if (history.empty()) return d;
  double best = history[0];
  std::size_t since = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] > best + min_delta) {
      best = history[i];
      since = 0;
    } else {
      ++since;
    }
    if (history[i] > history[d.best_epoch]) d.best_epoch = i;
  }
  d.stop = since >= patience;
  return d;
}

}  // namespace srlab
