#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srlab/common.hpp"
#include "srlab/head.hpp"
#include "srlab/layers.hpp"
#include "srlab/matrix.hpp"

namespace srlab {

// activations[i] is the input of layer i; activations.back() is the logits.
struct ForwardCache {
  Mode mode = Mode::Eval;
  std::vector<Matrix> activations;
  std::vector<Matrix> masks;
};

struct ForwardResult {
  Matrix logits;
  Matrix bottleneck;
  ForwardCache cache;
};

struct Gradients {
  std::vector<Matrix> params;  // same order as Model::parameters()
  std::optional<Matrix> input;
};

class Model {
 public:
  // `bottleneck_layer` is the index of the layer whose output is the
  // representation g; -1 designates the raw input.
  Model(std::size_t input_width, std::vector<Layer> layers, HeadDesign head,
        std::uint64_t seed, std::ptrdiff_t bottleneck_layer);

  // Dropout in Train mode draws from `dropout_rng`; the model itself is not
  // modified, so Eval-mode forwards may run concurrently.
  ForwardResult forward(const Matrix& batch, Rng* dropout_rng = nullptr) const;

  Gradients backward(const ForwardCache& cache, const Matrix& dlogits,
                     bool want_input_grad) const;

  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }

  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t input_width() const { return input_width_; }
  std::size_t output_width() const { return output_width_; }
  HeadDesign head_design() const { return head_; }
  std::uint64_t seed() const { return seed_; }
  std::ptrdiff_t bottleneck_layer() const { return bottleneck_layer_; }
  // True when the bottleneck is taken after an SR projection.
  bool bottleneck_after_projection() const;

  // Stable textual description of every structural choice (layer kinds,
  // widths, shell radii, LinearNorm switch, dropout rates, head design).
  std::string architecture_signature() const;

  // Free-form description of how the model was trained; compared by the
  // attack harness to enforce identical target/shadow configurations.
  const std::string& training_tag() const { return training_tag_; }
  void set_training_tag(std::string tag) { training_tag_ = std::move(tag); }

 private:
  std::size_t input_width_;
  std::size_t output_width_ = 0;
  std::vector<Layer> layers_;
  HeadDesign head_;
  std::uint64_t seed_;
  std::ptrdiff_t bottleneck_layer_;
  Mode mode_ = Mode::Train;
  std::string training_tag_;
};

enum class Activation { Tanh, Relu };
std::string to_string(Activation a);
Activation parse_activation(std::string_view name);

struct MlpSpec {
  std::size_t input_width = 0;
  std::vector<std::size_t> hidden;  // body widths, e.g. {1024, 512, 256}
  Activation activation = Activation::Tanh;
  double dropout = 0.0;             // after every hidden activation when > 0
  HeadDesign head = HeadDesign::Vanilla;
  std::size_t num_classes = 0;
  SrcmConfig srcm;                  // hidden_width 0 -> bottleneck width
};

// Body of Dense/activation(/dropout) blocks followed by the requested head,
// initialized from `seed`.
Model build_mlp(const MlpSpec& spec, std::uint64_t seed);

}  // namespace srlab
