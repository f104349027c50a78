#include "srlab/model.hpp"

#include <fmt/format.h>

#include "srlab/errors.hpp"

namespace srlab {

Model::Model(std::size_t input_width, std::vector<Layer> layers, HeadDesign head,
             std::uint64_t seed, std::ptrdiff_t bottleneck_layer)
    : input_width_(input_width),
      layers_(std::move(layers)),
      head_(head),
      seed_(seed),
      bottleneck_layer_(bottleneck_layer) {
  if (bottleneck_layer_ < -1 || bottleneck_layer_ >= static_cast<std::ptrdiff_t>(layers_.size())) {
    throw ShapeError(fmt::format("bottleneck layer {} out of range", bottleneck_layer_));
  }
  std::size_t width = input_width_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (const auto in = layer_input_width(layers_[i]); in && *in != width) {
      throw ShapeError(fmt::format("layer {} ({}) expects width {} but receives {}", i,
                                   layer_kind(layers_[i]), *in, width));
    }
    if (const auto out = layer_output_width(layers_[i])) width = *out;
  }
  output_width_ = width;
}

ForwardResult Model::forward(const Matrix& batch, Rng* dropout_rng) const {
  if (batch.cols() != input_width_) {
    throw ShapeError(fmt::format("layer 0 ({}) expects width {} but batch has {} columns",
                                 layers_.empty() ? "none" : layer_kind(layers_[0]),
                                 input_width_, batch.cols()));
  }
  ForwardResult result;
  auto& cache = result.cache;
  cache.mode = mode_;
  cache.activations.reserve(layers_.size() + 1);
  cache.masks.resize(layers_.size());
  cache.activations.push_back(batch);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      cache.activations.push_back(
          layer_forward(layers_[i], cache.activations.back(), mode_, dropout_rng, cache.masks[i]));
    } catch (const ShapeError& e) {
      throw ShapeError(fmt::format("layer {} ({}): {}", i, layer_kind(layers_[i]), e.what()));
    }
  }
  result.logits = cache.activations.back();
  result.bottleneck = cache.activations[static_cast<std::size_t>(bottleneck_layer_ + 1)];
  return result;
}

Gradients Model::backward(const ForwardCache& cache, const Matrix& dlogits,
                          bool want_input_grad) const {
  if (cache.activations.size() != layers_.size() + 1 || cache.masks.size() != layers_.size()) {
    throw StateError("backward: cache does not belong to this model");
  }
  if (cache.mode != mode_) throw StateError("backward: model mode changed since forward");
  std::size_t width = input_width_;
  const std::size_t rows = cache.activations.front().rows();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Matrix& in = cache.activations[i];
    if (in.cols() != width || in.rows() != rows) {
      throw StateError(fmt::format("backward: stale cache at layer {}", i));
    }
    if (const auto out = layer_output_width(layers_[i])) width = *out;
  }
  if (!dlogits.same_shape(cache.activations.back()) || dlogits.cols() != output_width_) {
    throw StateError(fmt::format("backward: dlogits {} does not match logits {}",
                                 dlogits.shape_string(),
                                 cache.activations.back().shape_string()));
  }

  // Parameter gradients are laid out in forward order; fill them back to front.
  std::vector<std::size_t> offsets(layers_.size() + 1, 0);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    offsets[i + 1] = offsets[i] + parameter_count(layers_[i]);
  }
  Gradients grads;
  grads.params.resize(offsets.back());
  Matrix upstream = dlogits;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const std::span<Matrix> slot(grads.params.data() + offsets[k], parameter_count(layers_[k]));
    const bool need_input_grad = k > 0 || want_input_grad;
    if (!need_input_grad && slot.empty()) break;
    upstream = layer_backward(layers_[k], cache.activations[k], cache.activations[k + 1],
                              cache.masks[k], upstream, cache.mode, slot, need_input_grad);
  }
  if (want_input_grad) grads.input = std::move(upstream);
  return grads;
}

std::vector<Matrix*> Model::parameters() {
  std::vector<Matrix*> params;
  for (auto& layer : layers_) {
    for (std::size_t i = 0; i < parameter_count(layer); ++i) {
      params.push_back(&layer_parameter(layer, i));
    }
  }
  return params;
}

std::vector<const Matrix*> Model::parameters() const {
  std::vector<const Matrix*> params;
  for (const auto& layer : layers_) {
    for (std::size_t i = 0; i < parameter_count(layer); ++i) {
      params.push_back(&layer_parameter(layer, i));
    }
  }
  return params;
}

bool Model::bottleneck_after_projection() const {
  return bottleneck_layer_ >= 0 &&
         std::holds_alternative<SrLayer>(layers_[static_cast<std::size_t>(bottleneck_layer_)]);
}

std::string Model::architecture_signature() const {
  std::string sig = fmt::format("in={} head={} bottleneck={}", input_width_, to_string(head_),
                                bottleneck_layer_);
  for (const auto& layer : layers_) {
    sig += ' ';
    sig += layer_kind(layer);
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      sig += fmt::format(":{}x{}", d->weight.rows(), d->weight.cols());
    } else if (const auto* l = std::get_if<LinearNormLayer>(&layer)) {
      sig += fmt::format(":{}x{}:all_on={}", l->weight.rows(), l->weight.cols(), l->all_on);
    } else if (const auto* s = std::get_if<SrLayer>(&layer)) {
      sig += fmt::format(":r1={}:d={}", s->config.r1, s->config.d);
    } else if (const auto* p = std::get_if<DropoutLayer>(&layer)) {
      sig += fmt::format(":{}", p->rate);
    }
  }
  return sig;
}

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError(fmt::format("unknown activation '{}'", name));
}

Model build_mlp(const MlpSpec& spec, std::uint64_t seed) {
  if (spec.input_width == 0 || spec.num_classes == 0) {
    throw ConfigError("build_mlp: input width and class count must be positive");
  }
  if (spec.dropout < 0.0 || spec.dropout >= 1.0) {
    throw ConfigError("build_mlp: dropout rate must lie in [0, 1)");
  }
  Rng rng(seed);
  std::vector<Layer> layers;
  std::size_t width = spec.input_width;
  std::ptrdiff_t bottleneck = -1;
  for (const std::size_t h : spec.hidden) {
    if (h == 0) throw ConfigError("build_mlp: hidden widths must be positive");
    layers.emplace_back(make_dense(width, h, rng));
    if (spec.activation == Activation::Tanh) {
      layers.emplace_back(TanhLayer{});
    } else {
      layers.emplace_back(ReluLayer{});
    }
    bottleneck = static_cast<std::ptrdiff_t>(layers.size()) - 1;
    if (spec.dropout > 0.0) layers.emplace_back(DropoutLayer{spec.dropout});
    width = h;
  }
  const std::size_t head_start = layers.size();
  const std::size_t hidden_width = spec.srcm.hidden_width == 0 ? width : spec.srcm.hidden_width;
  auto head = build_head(spec.head, width, hidden_width, spec.num_classes, spec.srcm, rng);
  for (auto& l : head) layers.push_back(std::move(l));
  if (spec.head == HeadDesign::DesignB || spec.head == HeadDesign::Srcm) {
    bottleneck = static_cast<std::ptrdiff_t>(head_start) + 1;
  }
  return Model(spec.input_width, std::move(layers), spec.head, seed, bottleneck);
}

}  // namespace srlab
