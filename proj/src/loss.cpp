#include "srlab/loss.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "srlab/errors.hpp"

namespace srlab {

double log_sum_exp(std::span<const double> row) {
  const double m = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (const double v : row) s += std::exp(v - m);
  return m + std::log(s);
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    auto out = p.row(r);
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      out[c] = std::exp(z[c] - m);
      s += out[c];
    }
    for (double& v : out) v /= s;
  }
  return p;
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes) {
  if (labels.size() != rows) {
    throw InputError(fmt::format("{} labels for {} rows", labels.size(), rows));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw InputError(fmt::format("label {} at row {} outside [0, {})", labels[i], i, classes));
    }
  }
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() == 0) throw InputError("softmax_cross_entropy: empty batch");
  check_labels(labels, logits.rows(), logits.cols());
  LossResult out;
  out.probs = softmax(logits);
  out.dlogits = out.probs;
  const double n = static_cast<double>(logits.rows());
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    const auto y = static_cast<std::size_t>(labels[r]);
    total += log_sum_exp(z) - z[y];
    out.dlogits(r, y) -= 1.0;
  }
  for (double& v : out.dlogits.values()) v /= n;
  out.loss = total / n;
  return out;
}

LossResult sigmoid_binary_cross_entropy(const Matrix& logits, std::span<const int> targets) {
  if (logits.cols() != 1) throw ShapeError("binary cross-entropy expects one logit per row");
  if (logits.rows() == 0) throw InputError("binary cross-entropy: empty batch");
  check_labels(targets, logits.rows(), 2);
  LossResult out;
  out.probs = Matrix(logits.rows(), 1);
  out.dlogits = Matrix(logits.rows(), 1);
  const double n = static_cast<double>(logits.rows());
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double z = logits[r];
    const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    // log(1 + e^z) - t z, written stably
    total += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - targets[r] * z;
    out.probs[r] = p;
    out.dlogits[r] = (p - targets[r]) / n;
  }
  out.loss = total / n;
  return out;
}

}  // namespace srlab
