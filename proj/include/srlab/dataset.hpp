#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "srlab/matrix.hpp"

namespace srlab {

struct SyntheticParams {
  std::size_t n = 20000;
  std::size_t dim = 600;
  std::size_t classes = 100;
  double flip_prob = 0.2;
  std::uint64_t seed = 0;

  friend bool operator==(const SyntheticParams&, const SyntheticParams&) = default;
};

struct TabularDataset {
  Matrix features;          // N x D_in
  std::vector<int> labels;  // N entries in [0, num_classes)
  std::size_t num_classes = 0;
  std::string provenance;   // "file:<path>" or "synthetic:<params>"

  std::size_t size() const { return labels.size(); }
  std::size_t width() const { return features.cols(); }
  // Throws InputError when labels and features disagree.
  void validate() const;
};

TabularDataset subset(const TabularDataset& ds, std::span<const std::size_t> indices);

// Purchase-style layout: headerless CSV, one sample per line, the class label
// followed by `features` binary values.
struct PurchaseFormat {
  std::size_t features = 600;
  std::size_t classes = 100;
};

TabularDataset load_purchase_csv(const std::filesystem::path& path, PurchaseFormat format = {});
TabularDataset parse_purchase_csv(std::string_view text, PurchaseFormat format = {},
                                  std::string_view source = "<memory>");
std::string to_purchase_csv(const TabularDataset& ds);

// One random binary prototype per class; every sample copies its class
// prototype and flips each bit independently with probability flip_prob.
TabularDataset generate_synthetic(const SyntheticParams& params);

// SHA-256 over shape, class count, features and labels; 64 hex characters.
std::string dataset_digest(const TabularDataset& ds);

}  // namespace srlab
