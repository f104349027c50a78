#include "srlab/records.hpp"

#include <algorithm>
#include <numeric>

#include "srlab/errors.hpp"
#include "srlab/loss.hpp"

namespace srlab {

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::NN:
      return "nn";
    case AttackKind::Entropy:
      return "entropy";
    case AttackKind::MEntropy:
      return "mentropy";
    case AttackKind::GradX:
      return "gradx";
  }
  return "unknown";
}

double margin(std::span<const double> probs) {
  if (probs.size() < 2) throw InputError("margin needs at least two classes");
  double top1 = -1.0;
  double top2 = -1.0;
  for (const double p : probs) {
    if (p > top1) {
      top2 = top1;
      top1 = p;
    } else if (p > top2) {
      top2 = p;
    }
  }
  return top1 - top2;
}

std::vector<PredictionRecord> collect_records(const Model& model, const TabularDataset& data,
                                              std::span<const std::size_t> ids, bool is_member,
                                              std::size_t batch) {
  if (model.mode() != Mode::Eval) throw StateError("collect_records needs an Eval-mode model");
  if (ids.size() != data.size()) throw InputError("collect_records: ids and data disagree");
  std::vector<PredictionRecord> records(data.size());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t end = std::min(data.size(), start + batch);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    const auto fwd = model.forward(gather_rows(data.features, rows));
    const Matrix probs = softmax(fwd.logits);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto& rec = records[start + r];
      rec.sample_id = ids[start + r];
      rec.label = data.labels[start + r];
      rec.is_member = is_member;
      const auto p = probs.row(r);
      rec.probs.assign(p.begin(), p.end());
      rec.magnitude = row_norm(fwd.bottleneck.row(r));
      rec.margin = p.size() >= 2 ? margin(p) : 1.0;
    }
  }
  return records;
}

}  // namespace srlab
