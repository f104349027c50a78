#include "srlab/trace.hpp"

namespace srlab {

void AccessTrace::record(std::string_view stage, std::span<const std::size_t> indices) {
  events_.push_back({std::string(stage), {indices.begin(), indices.end()}});
}

TabularDataset traced_subset(const TabularDataset& ds, std::span<const std::size_t> indices,
                             std::string_view stage, AccessTrace* trace) {
  if (trace != nullptr) trace->record(stage, indices);
  return subset(ds, indices);
}

}  // namespace srlab
