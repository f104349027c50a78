#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "srlab/common.hpp"
#include "srlab/layers.hpp"
#include "srlab/srcm.hpp"

namespace srlab {

// Classifier head variants:
//   Vanilla: Dense(bw -> C)
//   DesignA: Dense(bw -> C) -> SR                       (SR on the logits)
//   DesignB: Dense(bw -> Dh) -> SR -> LinearNorm(all_on = false)
//   Srcm:    Dense(bw -> Dh) -> SR -> LinearNorm(all_on = true)
enum class HeadDesign { Vanilla, DesignA, DesignB, Srcm };

std::string to_string(HeadDesign design);
// Accepts vanilla, design_a, design_b, srcm. Throws ConfigError otherwise.
HeadDesign parse_head_design(std::string_view name);

bool uses_shell(HeadDesign design);

// Layers of the head; `hidden_width` is only used by DesignB and Srcm.
// The design fixes LinearNorm's all_on switch, so cfg.all_on is ignored.
std::vector<Layer> build_head(HeadDesign design, std::size_t bottleneck_width,
                              std::size_t hidden_width, std::size_t num_classes,
                              const SrcmConfig& cfg, Rng& rng);

}  // namespace srlab
