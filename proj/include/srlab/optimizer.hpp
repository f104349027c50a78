#pragma once

#include <vector>

#include "srlab/matrix.hpp"
#include "srlab/model.hpp"

namespace srlab {

// SGD with momentum; weight decay is folded into the velocity:
//   v <- momentum * v + (grad + weight_decay * w);  w <- w - lr * v
struct OptimizerState {
  double learning_rate = 0.1;
  double momentum = 0.09;
  double weight_decay = 5e-4;
  std::vector<Matrix> velocity;  // one buffer per model parameter
};

// Zero velocity buffers shaped like the model's parameters.
OptimizerState make_sgd(const Model& model, double learning_rate, double momentum,
                        double weight_decay);

// Throws NumericError (and leaves everything untouched) on a non-finite
// gradient, ShapeError on a gradient/parameter mismatch.
void sgd_step(Model& model, const Gradients& grads, OptimizerState& opt);

}  // namespace srlab
