#include "srlab/head.hpp"

#include <fmt/format.h>

#include "srlab/errors.hpp"

namespace srlab {

std::string to_string(HeadDesign design) {
  switch (design) {
    case HeadDesign::Vanilla:
      return "vanilla";
    case HeadDesign::DesignA:
      return "design_a";
    case HeadDesign::DesignB:
      return "design_b";
    case HeadDesign::Srcm:
      return "srcm";
  }
  throw ConfigError("unknown head design");
}

HeadDesign parse_head_design(std::string_view name) {
  if (name == "vanilla") return HeadDesign::Vanilla;
  if (name == "design_a") return HeadDesign::DesignA;
  if (name == "design_b") return HeadDesign::DesignB;
  if (name == "srcm") return HeadDesign::Srcm;
  throw ConfigError(fmt::format("unknown head design '{}'", name));
}

bool uses_shell(HeadDesign design) { return design != HeadDesign::Vanilla; }

std::vector<Layer> build_head(HeadDesign design, std::size_t bottleneck_width,
                              std::size_t hidden_width, std::size_t num_classes,
                              const SrcmConfig& cfg, Rng& rng) {
  if (bottleneck_width == 0 || num_classes == 0) {
    throw ConfigError("build_head: widths must be positive");
  }
  std::vector<Layer> head;
  switch (design) {
    case HeadDesign::Vanilla:
      head.emplace_back(make_dense(bottleneck_width, num_classes, rng));
      return head;
    case HeadDesign::DesignA:
      cfg.validate();
      head.emplace_back(make_dense(bottleneck_width, num_classes, rng));
      head.emplace_back(SrLayer{cfg});
      return head;
    case HeadDesign::DesignB:
    case HeadDesign::Srcm: {
      cfg.validate();
      if (hidden_width == 0) throw ConfigError("build_head: hidden width must be positive");
      const bool all_on = design == HeadDesign::Srcm;
      SrcmConfig layer_cfg = cfg;
      layer_cfg.all_on = all_on;
      layer_cfg.hidden_width = hidden_width;
      head.emplace_back(make_dense(bottleneck_width, hidden_width, rng));
      head.emplace_back(SrLayer{layer_cfg});
      head.emplace_back(make_linearnorm(hidden_width, num_classes, all_on, rng));
      return head;
    }
  }
  throw ConfigError("build_head: unknown head design");
}

}  // namespace srlab
