#include "srlab/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "srlab/errors.hpp"

namespace srlab {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

std::vector<double> edges(double lo, double hi, std::size_t bins) {
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  e[bins] = hi;
  return e;
}

std::size_t bin_of(double v, const std::vector<double>& e) {
  const std::size_t bins = e.size() - 1;
  if (bins == 1) return 0;
  const double lo = e.front();
  const double hi = e.back();
  auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
  return std::min(b, bins - 1);
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("spearman: length mismatch");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

std::size_t BinTable::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

MagnitudeMarginTables magnitude_margin_table(std::span<const PredictionRecord> records,
                                             std::size_t magnitude_bins, std::size_t margin_bins,
                                             bool magnitude_after_projection,
                                             AttackKind accuracy_source) {
  if (magnitude_bins == 0 || margin_bins == 0) throw InputError("bin counts must be positive");
  const bool has_member = std::any_of(records.begin(), records.end(),
                                      [](const auto& r) { return r.is_member; });
  const bool has_non = std::any_of(records.begin(), records.end(),
                                   [](const auto& r) { return !r.is_member; });
  if (!has_member || !has_non) {
    throw InputError("magnitude_margin_table needs records of both membership classes");
  }
  MagnitudeMarginTables out;
  out.magnitude_after_projection = magnitude_after_projection;
  out.accuracy_source = accuracy_source;

  const auto [mag_lo, mag_hi] = std::minmax_element(
      records.begin(), records.end(), [](const auto& a, const auto& b) { return a.magnitude < b.magnitude; });
  const auto [mar_lo, mar_hi] = std::minmax_element(
      records.begin(), records.end(), [](const auto& a, const auto& b) { return a.margin < b.margin; });
  std::size_t mbins = magnitude_bins;
  std::size_t gbins = margin_bins;
  if (mag_lo->magnitude == mag_hi->magnitude) {
    mbins = 1;
    out.warnings.push_back("all magnitudes identical; magnitude axis collapsed to one bin");
  }
  if (mar_lo->margin == mar_hi->margin) {
    gbins = 1;
    out.warnings.push_back("all margins identical; margin axis collapsed to one bin");
  }
  const auto mag_edges = edges(mag_lo->magnitude, mag_hi->magnitude, mbins);
  const auto mar_edges = edges(mar_lo->margin, mar_hi->margin, gbins);

  const auto k = static_cast<std::size_t>(accuracy_source);
  for (const bool member : {true, false}) {
    BinTable t;
    t.magnitude_edges = mag_edges;
    t.margin_edges = mar_edges;
    t.counts.assign(mbins * gbins, 0);
    t.attack_accuracy.assign(mbins * gbins, 0.0);
    std::vector<double> mags;
    std::vector<double> margins;
    for (const auto& r : records) {
      if (r.is_member != member) continue;
      const std::size_t cell = bin_of(r.magnitude, mag_edges) * gbins + bin_of(r.margin, mar_edges);
      t.counts[cell] += 1;
      t.attack_accuracy[cell] += r.attack_correct[k] ? 1.0 : 0.0;
      mags.push_back(r.magnitude);
      margins.push_back(r.margin);
    }
    for (std::size_t c = 0; c < t.counts.size(); ++c) {
      if (t.counts[c] > 0) t.attack_accuracy[c] /= static_cast<double>(t.counts[c]);
    }
    const auto corr = pearson(mags, margins);
    if (member) {
      out.member = std::move(t);
      out.pearson_member = corr;
    } else {
      out.non_member = std::move(t);
      out.pearson_non_member = corr;
    }
  }
  return out;
}

std::string to_csv(const BinTable& table) {
  std::string out = "mag_lo,mag_hi,margin_lo,margin_hi,count,attack_acc\n";
  for (std::size_t i = 0; i < table.magnitude_bins(); ++i) {
    for (std::size_t j = 0; j < table.margin_bins(); ++j) {
      out += fmt::format("{},{},{},{},{},{}\n", table.magnitude_edges[i],
                         table.magnitude_edges[i + 1], table.margin_edges[j],
                         table.margin_edges[j + 1], table.count(i, j), table.accuracy(i, j));
    }
  }
  return out;
}

LatencyStats latency_bench(const Model& model, const Matrix& batch, std::size_t iters,
                           std::size_t warmup) {
  if (iters < 10) throw InputError("latency_bench: iters must be at least 10");
  if (warmup < 1) throw InputError("latency_bench: warmup must be at least 1");
  Model eval = model;
  eval.set_mode(Mode::Eval);
  double sink = 0.0;
  for (std::size_t i = 0; i < warmup; ++i) sink += eval.forward(batch).logits[0];
  std::vector<double> ms(iters);
  for (std::size_t i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    sink += eval.forward(batch).logits[0];
    const auto t1 = std::chrono::steady_clock::now();
    ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  volatile double keep = sink;
  (void)keep;
  LatencyStats s;
  s.iters = iters;
  s.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(iters);
  double var = 0.0;
  for (const double v : ms) var += (v - s.mean_ms) * (v - s.mean_ms);
  s.std_ms = std::sqrt(var / static_cast<double>(iters - 1));
  return s;
}

}  // namespace srlab
