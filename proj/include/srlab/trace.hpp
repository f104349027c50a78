#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srlab/dataset.hpp"

namespace srlab {

struct AccessEvent {
  std::string stage;
  std::vector<std::size_t> indices;
};

// Records which dataset rows each pipeline stage materialized.
class AccessTrace {
 public:
  void record(std::string_view stage, std::span<const std::size_t> indices);
  const std::vector<AccessEvent>& events() const { return events_; }

 private:
  std::vector<AccessEvent> events_;
};

// subset() that also logs the access when a trace is attached.
TabularDataset traced_subset(const TabularDataset& ds, std::span<const std::size_t> indices,
                             std::string_view stage, AccessTrace* trace);

}  // namespace srlab
