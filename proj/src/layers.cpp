#include "srlab/layers.hpp"

#include <cmath>

#include <fmt/format.h>

#include "srlab/errors.hpp"

namespace srlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(fan_in, fan_out);
  for (double& v : w.values()) v = dist(rng);
  return w;
}

Matrix dense_forward(const Matrix& x, const Matrix& w, const Matrix& b) {
  if (x.cols() != w.rows()) {
    throw ShapeError(fmt::format("dense: input {} vs weight {}", x.shape_string(),
                                 w.shape_string()));
  }
  Matrix y = matmul(x, w);
  add_row_vector(y, b);
  return y;
}

}  // namespace

std::string layer_kind(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const DenseLayer&) { return std::string("dense"); },
                        [](const TanhLayer&) { return std::string("tanh"); },
                        [](const ReluLayer&) { return std::string("relu"); },
                        [](const DropoutLayer&) { return std::string("dropout"); },
                        [](const SrLayer&) { return std::string("sr"); },
                        [](const LinearNormLayer&) { return std::string("linearnorm"); },
                    },
                    layer);
}

std::optional<std::size_t> layer_input_width(const Layer& layer) {
  if (const auto* d = std::get_if<DenseLayer>(&layer)) return d->weight.rows();
  if (const auto* l = std::get_if<LinearNormLayer>(&layer)) return l->weight.rows();
  return std::nullopt;
}

std::optional<std::size_t> layer_output_width(const Layer& layer) {
  if (const auto* d = std::get_if<DenseLayer>(&layer)) return d->weight.cols();
  if (const auto* l = std::get_if<LinearNormLayer>(&layer)) return l->weight.cols();
  return std::nullopt;
}

std::size_t parameter_count(const Layer& layer) {
  return std::holds_alternative<DenseLayer>(layer) ||
                 std::holds_alternative<LinearNormLayer>(layer)
             ? 2
             : 0;
}

Matrix& layer_parameter(Layer& layer, std::size_t i) {
  return const_cast<Matrix&>(layer_parameter(std::as_const(layer), i));
}

const Matrix& layer_parameter(const Layer& layer, std::size_t i) {
  if (const auto* d = std::get_if<DenseLayer>(&layer)) return i == 0 ? d->weight : d->bias;
  if (const auto* l = std::get_if<LinearNormLayer>(&layer)) return i == 0 ? l->weight : l->bias;
  throw StateError(fmt::format("{} layer has no parameters", layer_kind(layer)));
}

DenseLayer make_dense(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  return DenseLayer{glorot_uniform(fan_in, fan_out, rng), Matrix(1, fan_out)};
}

LinearNormLayer make_linearnorm(std::size_t fan_in, std::size_t fan_out, bool all_on, Rng& rng) {
  return LinearNormLayer{glorot_uniform(fan_in, fan_out, rng), Matrix(1, fan_out), all_on};
}

Matrix layer_forward(const Layer& layer, const Matrix& input, Mode mode, Rng* rng,
                     Matrix& mask) {
  return std::visit(
      Overloaded{
          [&](const DenseLayer& l) { return dense_forward(input, l.weight, l.bias); },
          [&](const TanhLayer&) {
            Matrix y = input;
            for (double& v : y.values()) v = std::tanh(v);
            return y;
          },
          [&](const ReluLayer&) {
            Matrix y = input;
            for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
            return y;
          },
          [&](const DropoutLayer& l) {
            if (mode == Mode::Eval || l.rate == 0.0) return input;
            if (rng == nullptr) throw StateError("dropout in Train mode needs an rng");
            const double keep = 1.0 - l.rate;
            std::bernoulli_distribution coin(keep);
            mask = Matrix(input.rows(), input.cols());
            Matrix y = input;
            for (std::size_t i = 0; i < y.size(); ++i) {
              mask[i] = coin(*rng) ? 1.0 / keep : 0.0;
              y[i] *= mask[i];
            }
            return y;
          },
          [&](const SrLayer& l) { return sr_forward(input, l.config); },
          [&](const LinearNormLayer& l) {
            return linearnorm_forward(input, l.weight, l.bias, mode, l.all_on);
          },
      },
      layer);
}

Matrix layer_backward(const Layer& layer, const Matrix& input, const Matrix& output,
                      const Matrix& mask, const Matrix& upstream, Mode mode,
                      std::span<Matrix> param_grads, bool need_input_grad) {
  return std::visit(
      Overloaded{
          [&](const DenseLayer& l) {
            param_grads[0] = matmul_tn(input, upstream);
            param_grads[1] = column_sums(upstream);
            if (!need_input_grad) return Matrix();
            return matmul_nt(upstream, l.weight);
          },
          [&](const TanhLayer&) {
            Matrix dx = upstream;
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - output[i] * output[i];
            return dx;
          },
          [&](const ReluLayer&) {
            Matrix dx = upstream;
            for (std::size_t i = 0; i < dx.size(); ++i) {
              if (!(input[i] > 0.0)) dx[i] = 0.0;
            }
            return dx;
          },
          [&](const DropoutLayer&) {
            if (mask.empty()) return upstream;
            Matrix dx = upstream;
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask[i];
            return dx;
          },
          [&](const SrLayer& l) { return sr_backward(input, l.config, upstream); },
          [&](const LinearNormLayer& l) {
            auto g = linearnorm_backward(input, l.weight, l.bias, upstream, mode, l.all_on);
            param_grads[0] = std::move(g.dw);
            param_grads[1] = std::move(g.db);
            return std::move(g.dg);
          },
      },
      layer);
}

}  // namespace srlab
