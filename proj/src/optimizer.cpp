#include "srlab/optimizer.hpp"

#include <cmath>

#include <fmt/format.h>

#include "srlab/errors.hpp"

namespace srlab {

OptimizerState make_sgd(const Model& model, double learning_rate, double momentum,
                        double weight_decay) {
  if (!(learning_rate > 0.0)) throw ConfigError("optimizer.lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("optimizer.momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("optimizer.weight_decay must be non-negative");
  OptimizerState opt{learning_rate, momentum, weight_decay, {}};
  for (const Matrix* p : model.parameters()) opt.velocity.emplace_back(p->rows(), p->cols());
  return opt;
}

void sgd_step(Model& model, const Gradients& grads, OptimizerState& opt) {
  auto params = model.parameters();
  if (grads.params.size() != params.size() || opt.velocity.size() != params.size()) {
    throw ShapeError(fmt::format("sgd_step: {} parameters, {} gradients, {} velocity buffers",
                                 params.size(), grads.params.size(), opt.velocity.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads.params[i].same_shape(*params[i]) || !opt.velocity[i].same_shape(*params[i])) {
      throw ShapeError(fmt::format("sgd_step: parameter {} is {}, gradient {}", i,
                                   params[i]->shape_string(), grads.params[i].shape_string()));
    }
    if (!all_finite(grads.params[i])) {
      throw NumericError(fmt::format("sgd_step: non-finite gradient for parameter {}", i));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i]->values();
    auto v = opt.velocity[i].values();
    const auto g = grads.params[i].values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = opt.momentum * v[j] + (g[j] + opt.weight_decay * w[j]);
      w[j] -= opt.learning_rate * v[j];
    }
  }
}

}  // namespace srlab
