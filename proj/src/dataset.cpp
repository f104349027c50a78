#include "srlab/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "srlab/common.hpp"
#include "srlab/errors.hpp"

namespace srlab {

void TabularDataset::validate() const {
  if (features.rows() != labels.size()) {
    throw InputError(fmt::format("dataset has {} feature rows but {} labels", features.rows(),
                                 labels.size()));
  }
  for (const int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw InputError(fmt::format("label {} outside [0, {})", y, num_classes));
    }
  }
}

TabularDataset subset(const TabularDataset& ds, std::span<const std::size_t> indices) {
  TabularDataset out;
  out.features = gather_rows(ds.features, indices);
  out.labels.reserve(indices.size());
  for (const std::size_t i : indices) out.labels.push_back(ds.labels[i]);
  out.num_classes = ds.num_classes;
  out.provenance = ds.provenance;
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

TabularDataset parse_purchase_csv(std::string_view text, PurchaseFormat format,
                                  std::string_view source) {
  TabularDataset ds;
  ds.num_classes = format.classes;
  ds.provenance = fmt::format("file:{}", source);
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;

    std::size_t field = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string_view tok =
          trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
      if (field == 0) {
        int label = -1;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), label);
        if (ec != std::errc{} || ptr != tok.data() + tok.size() || label < 0 ||
            static_cast<std::size_t>(label) >= format.classes) {
          throw ParseError(fmt::format("{}: line {}: unknown label '{}'", source, line_no, tok));
        }
        ds.labels.push_back(label);
      } else if (field <= format.features) {
        if (tok == "0") {
          values.push_back(0.0);
        } else if (tok == "1") {
          values.push_back(1.0);
        } else {
          throw ParseError(
              fmt::format("{}: line {}: non-binary feature '{}' in column {}", source, line_no, tok, field));
        }
      }
      ++field;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (field != format.features + 1) {
      throw ParseError(fmt::format("{}: line {}: expected {} fields, found {}", source, line_no,
                                   format.features + 1, field));
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(fmt::format("{}: empty dataset", source));
  ds.features = Matrix(rows, format.features, std::move(values));
  return ds;
}

TabularDataset load_purchase_csv(const std::filesystem::path& path, PurchaseFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_purchase_csv(buf.str(), format, path.string());
}

std::string to_purchase_csv(const TabularDataset& ds) {
  std::string out;
  out.reserve(ds.size() * (ds.width() * 2 + 4));
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out += std::to_string(ds.labels[r]);
    for (const double v : ds.features.row(r)) {
      out += ',';
      out += v != 0.0 ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

TabularDataset generate_synthetic(const SyntheticParams& p) {
  if (p.classes == 0 || p.dim == 0 || p.n == 0) {
    throw ConfigError("synthetic dataset needs positive n, dim and classes");
  }
  if (p.n % p.classes != 0) {
    throw ConfigError(fmt::format("synthetic n={} is not divisible by classes={}", p.n, p.classes));
  }
  if (!(p.flip_prob >= 0.0 && p.flip_prob < 0.5)) {
    throw ConfigError(fmt::format("synthetic flip_prob={} must lie in [0, 0.5)", p.flip_prob));
  }
  Rng rng(p.seed);
  std::bernoulli_distribution half(0.5);
  std::bernoulli_distribution flip(p.flip_prob);
  Matrix prototypes(p.classes, p.dim);
  for (double& v : prototypes.values()) v = half(rng) ? 1.0 : 0.0;

  TabularDataset ds;
  ds.num_classes = p.classes;
  ds.features = Matrix(p.n, p.dim);
  ds.labels.resize(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    const auto cls = i % p.classes;
    ds.labels[i] = static_cast<int>(cls);
    const auto proto = prototypes.row(cls);
    auto row = ds.features.row(i);
    for (std::size_t j = 0; j < p.dim; ++j) {
      row[j] = flip(rng) ? 1.0 - proto[j] : proto[j];
    }
  }
  ds.provenance = fmt::format("synthetic:n={},dim={},classes={},flip_prob={},seed={}", p.n, p.dim,
                              p.classes, p.flip_prob, p.seed);
  return ds;
}

namespace {

template <class T>
void append_le(std::vector<unsigned char>& buf, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

}  // namespace

std::string dataset_digest(const TabularDataset& ds) {
  std::vector<unsigned char> buf;
  buf.reserve(24 + ds.features.size() * 8 + ds.labels.size() * 8);
  append_le<std::uint64_t>(buf, ds.features.rows());
  append_le<std::uint64_t>(buf, ds.features.cols());
  append_le<std::uint64_t>(buf, ds.num_classes);
  for (const double v : ds.features.values()) append_le<double>(buf, v);
  for (const int y : ds.labels) append_le<std::int64_t>(buf, y);

  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(buf.data(), buf.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw LabError("dataset_digest: SHA-256 failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

}  // namespace srlab
