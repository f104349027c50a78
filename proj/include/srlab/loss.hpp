#pragma once

#include <span>

#include "srlab/matrix.hpp"

namespace srlab {

struct LossResult {
  double loss = 0.0;  // mean over rows
  Matrix probs;
  Matrix dlogits;     // gradient of the mean loss
};

// Row-wise softmax using max-shifted exponentials.
Matrix softmax(const Matrix& logits);

// Row-wise log-sum-exp, max-shifted.
double log_sum_exp(std::span<const double> row);

// Throws InputError unless labels.size() == rows and every label < classes.
void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes);

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

// Single-logit binary cross-entropy; probs holds sigmoid(logit).
LossResult sigmoid_binary_cross_entropy(const Matrix& logits, std::span<const int> targets);

}  // namespace srlab
