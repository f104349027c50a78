#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "srlab/common.hpp"
#include "srlab/matrix.hpp"
#include "srlab/srcm.hpp"

namespace srlab {

// Fully connected layer: y = x W + b, W is fan_in x fan_out, b is 1 x fan_out.
struct DenseLayer {
  Matrix weight;
  Matrix bias;
};

struct TanhLayer {};
struct ReluLayer {};

// Inverted dropout; identity in Eval mode.
struct DropoutLayer {
  double rate = 0.0;
};

struct SrLayer {
  SrcmConfig config;
};

// Dual-mode magnitude-normalized classifier layer.
struct LinearNormLayer {
  Matrix weight;
  Matrix bias;
  bool all_on = true;
};

using Layer =
    std::variant<DenseLayer, TanhLayer, ReluLayer, DropoutLayer, SrLayer, LinearNormLayer>;

std::string layer_kind(const Layer& layer);

// Width the layer consumes, or nullopt for width-preserving layers.
std::optional<std::size_t> layer_input_width(const Layer& layer);
std::optional<std::size_t> layer_output_width(const Layer& layer);

// Parameter tensors in a fixed order (weight, then bias).
std::size_t parameter_count(const Layer& layer);
Matrix& layer_parameter(Layer& layer, std::size_t i);
const Matrix& layer_parameter(const Layer& layer, std::size_t i);

DenseLayer make_dense(std::size_t fan_in, std::size_t fan_out, Rng& rng);
LinearNormLayer make_linearnorm(std::size_t fan_in, std::size_t fan_out, bool all_on, Rng& rng);

// `mask` receives the dropout mask in Train mode (left empty otherwise).
// Dropout in Train mode with a positive rate requires `rng`.
Matrix layer_forward(const Layer& layer, const Matrix& input, Mode mode, Rng* rng,
                     Matrix& mask);

// Returns the gradient with respect to `input`, writing parameter gradients
// into `param_grads` (sized parameter_count(layer)). `output` is the cached
// forward output of the same layer. With `need_input_grad` false, layers with
// parameters may skip the input gradient and return an empty matrix.
Matrix layer_backward(const Layer& layer, const Matrix& input, const Matrix& output,
                      const Matrix& mask, const Matrix& upstream, Mode mode,
                      std::span<Matrix> param_grads, bool need_input_grad = true);

}  // namespace srlab
