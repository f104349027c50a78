#include "srlab/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "srlab/errors.hpp"
#include "srlab/loss.hpp"
#include "srlab/train.hpp"

namespace srlab {

MembershipSplit make_split(std::size_t n, std::uint64_t seed) {
  if (n < 4) throw InputError(fmt::format("make_split: need at least 4 samples, got {}", n));
  MembershipSplit split;
  const std::size_t used = n - n % 4;
  split.dropped = n - used;
  if (split.dropped > 0) {
    split.warnings.push_back(fmt::format(
        "dataset size {} is not divisible by 4; {} trailing samples of the permutation dropped",
        n, split.dropped));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t q = used / 4;
  auto take = [&](std::size_t k) {
    return std::vector<std::size_t>(perm.begin() + static_cast<std::ptrdiff_t>(k * q),
                                    perm.begin() + static_cast<std::ptrdiff_t>((k + 1) * q));
  };
  split.target_train = take(0);
  split.target_test = take(1);
  split.shadow_train = take(2);
  split.shadow_test = take(3);
  return split;
}

namespace {

void check_distribution(std::span<const double> p) {
  if (p.empty()) throw InputError("empty probability vector");
  double s = 0.0;
  for (const double v : p) {
    if (v < 0.0) throw InputError(fmt::format("negative probability {}", v));
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-6) throw InputError(fmt::format("probabilities sum to {}", s));
}

double clamped_log(double v) { return std::log(std::max(v, kLogClamp)); }

}  // namespace

double entropy_score(std::span<const double> probs) {
  check_distribution(probs);
  double s = 0.0;
  for (const double p : probs) {
    if (p > 0.0) s += p * std::log(p);
  }
  return s;
}

double mentropy_score(std::span<const double> probs, int label) {
  check_distribution(probs);
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw InputError(fmt::format("label {} outside [0, {})", label, probs.size()));
  }
  const auto y = static_cast<std::size_t>(label);
  double mentr = -(1.0 - probs[y]) * clamped_log(probs[y]);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i != y) mentr -= probs[i] * clamped_log(1.0 - probs[i]);
  }
  return -mentr;
}

std::vector<double> gradx_l2_scores(const Model& model, const Matrix& features,
                                    std::span<const int> labels) {
  if (model.mode() != Mode::Eval) throw StateError("gradx_l2_scores needs an Eval-mode model");
  check_labels(labels, features.rows(), model.output_width());
  std::vector<double> scores(features.rows());
  constexpr std::size_t kBatch = 256;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < features.rows(); start += kBatch) {
    const std::size_t end = std::min(features.rows(), start + kBatch);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    const auto fwd = model.forward(gather_rows(features, rows));
    // Rows are independent, so the unscaled per-sample gradient (p - onehot)
    // yields each sample's own input gradient.
    Matrix dlogits = softmax(fwd.logits);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      dlogits(r, static_cast<std::size_t>(labels[start + r])) -= 1.0;
    }
    const auto grads = model.backward(fwd.cache, dlogits, true);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      scores[start + r] = -row_norm(grads.input->row(r));
    }
  }
  return scores;
}

double gradx_l2_score(const Model& model, std::span<const double> x, int label) {
  const int labels[] = {label};
  return gradx_l2_scores(model, Matrix::row_vector(x), labels)[0];
}

double auc(std::span<const double> member_scores, std::span<const double> nonmember_scores) {
  const std::size_t n1 = member_scores.size();
  const std::size_t n0 = nonmember_scores.size();
  if (n1 == 0 || n0 == 0) throw InputError("auc needs at least one member and one non-member");
  struct Item {
    double score;
    bool member;
  };
  std::vector<Item> items;
  items.reserve(n1 + n0);
  for (const double s : member_scores) items.push_back({s, true});
  for (const double s : nonmember_scores) items.push_back({s, false});
  for (const auto& it : items) {
    if (!std::isfinite(it.score)) throw InputError("auc: non-finite score");
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  // Twice the member rank sum, so tied (half-integer) ranks stay integral.
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    const double twice_avg_rank = static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (items[k].member) twice_rank_sum += twice_avg_rank;
    }
    i = j;
  }
  const double n1d = static_cast<double>(n1);
  const double u = (twice_rank_sum - n1d * (n1d + 1.0)) / 2.0;
  return u / (n1d * static_cast<double>(n0));
}

double auc(std::span<const AttackScore> scores) {
  std::vector<double> members;
  std::vector<double> nonmembers;
  for (const auto& s : scores) (s.is_member ? members : nonmembers).push_back(s.score);
  return auc(members, nonmembers);
}

std::vector<double> attacker_features(std::span<const double> probs, std::size_t cap) {
  std::vector<double> f(probs.begin(), probs.end());
  std::sort(f.begin(), f.end(), std::greater<>());
  f.resize(cap, 0.0);
  return f;
}

namespace {

Matrix feature_matrix(std::span<const PredictionRecord> records, std::size_t dim) {
  Matrix m(records.size(), dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto f = attacker_features(records[i].probs, dim);
    std::copy(f.begin(), f.end(), m.row(i).begin());
  }
  return m;
}

Model build_attacker_model(std::size_t in, double dropout, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Layer> layers;
  std::size_t width = in;
  for (const std::size_t h : {128, 64, 64}) {
    layers.emplace_back(make_dense(width, h, rng));
    layers.emplace_back(ReluLayer{});
    if (dropout > 0.0) layers.emplace_back(DropoutLayer{dropout});
    width = h;
  }
  layers.emplace_back(make_dense(width, 1, rng));
  return Model(in, std::move(layers), HeadDesign::Vanilla, seed, -1);
}

}  // namespace

AttackerNet train_nn_attacker(std::span<const PredictionRecord> shadow_records, std::uint64_t seed,
                              const AttackerOptions& options) {
  if (shadow_records.empty()) throw InputError("train_nn_attacker: no shadow records");
  const bool any_member = std::any_of(shadow_records.begin(), shadow_records.end(),
                                      [](const auto& r) { return r.is_member; });
  const bool any_non = std::any_of(shadow_records.begin(), shadow_records.end(),
                                   [](const auto& r) { return !r.is_member; });
  if (!any_member || !any_non) {
    throw InputError("train_nn_attacker: shadow records carry a single membership class");
  }
  const std::size_t dim = std::min(shadow_records.front().probs.size(), options.max_features);

  TabularDataset data;
  data.features = feature_matrix(shadow_records, dim);
  data.num_classes = 2;
  for (const auto& r : shadow_records) data.labels.push_back(r.is_member ? 1 : 0);

  AttackerNet net{build_attacker_model(dim, options.dropout, seed), dim};
  OptimizerState opt =
      make_sgd(net.model, options.learning_rate, options.momentum, options.weight_decay);
  TrainOptions train{options.epochs, options.batch_size, seed + 0x5eed, LrSchedule::Constant};
  train_epochs(net.model, data, opt, train,
               [](const Matrix& z, std::span<const int> y) {
                 return sigmoid_binary_cross_entropy(z, y);
               });
  net.model.set_mode(Mode::Eval);
  return net;
}

std::vector<double> attacker_scores(const AttackerNet& net,
                                    std::span<const PredictionRecord> records) {
  if (records.empty()) return {};
  const Matrix logits = net.model.forward(feature_matrix(records, net.feature_dim)).logits;
  return {logits.values().begin(), logits.values().end()};
}

void check_adaptive_contract(const Model& target, const Model& shadow) {
  if (target.architecture_signature() != shadow.architecture_signature()) {
    throw ContractError(fmt::format("shadow architecture differs from target: '{}' vs '{}'",
                                    shadow.architecture_signature(),
                                    target.architecture_signature()));
  }
  if (target.training_tag() != shadow.training_tag()) {
    throw ContractError(fmt::format("shadow training configuration differs from target: '{}' vs '{}'",
                                    shadow.training_tag(), target.training_tag()));
  }
}

namespace {

void score_metrics(const Model& model, const TabularDataset& data,
                   std::vector<PredictionRecord>& records) {
  const auto grad = gradx_l2_scores(model, data.features, data.labels);
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    r.scores[static_cast<std::size_t>(AttackKind::Entropy)] = entropy_score(r.probs);
    r.scores[static_cast<std::size_t>(AttackKind::MEntropy)] = mentropy_score(r.probs, r.label);
    r.scores[static_cast<std::size_t>(AttackKind::GradX)] = grad[i];
  }
}

std::vector<PredictionRecord> concat(std::vector<PredictionRecord> a,
                                     std::vector<PredictionRecord> b) {
  a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
  return a;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double accuracy_of(std::span<const PredictionRecord> records) {
  std::size_t correct = 0;
  for (const auto& r : records) {
    const auto top = std::max_element(r.probs.begin(), r.probs.end()) - r.probs.begin();
    if (top == r.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

}  // namespace

AttackReport run_attack_suite(const Model& target, const Model& shadow,
                              const MembershipSplit& split, const TabularDataset& dataset,
                              const AttackOptions& options, std::uint64_t seed,
                              AccessTrace* trace) {
  check_adaptive_contract(target, shadow);
  if (target.mode() != Mode::Eval || shadow.mode() != Mode::Eval) {
    throw StateError("run_attack_suite needs Eval-mode models");
  }
  if (split.target_train.empty() || split.target_test.empty() || split.shadow_train.empty() ||
      split.shadow_test.empty()) {
    throw InputError("run_attack_suite: every split part must be non-empty");
  }

  // Shadow half: fit thresholds and the attack network.
  const auto shadow_in = traced_subset(dataset, split.shadow_train, "fit_attack", trace);
  const auto shadow_out = traced_subset(dataset, split.shadow_test, "fit_attack", trace);
  auto shadow_in_rec = collect_records(shadow, shadow_in, split.shadow_train, true);
  auto shadow_out_rec = collect_records(shadow, shadow_out, split.shadow_test, false);
  score_metrics(shadow, shadow_in, shadow_in_rec);
  score_metrics(shadow, shadow_out, shadow_out_rec);
  auto shadow_records = concat(std::move(shadow_in_rec), std::move(shadow_out_rec));

  const AttackerNet attacker = train_nn_attacker(shadow_records, seed, options.attacker);
  const auto shadow_nn = attacker_scores(attacker, shadow_records);
  for (std::size_t i = 0; i < shadow_records.size(); ++i) {
    shadow_records[i].scores[static_cast<std::size_t>(AttackKind::NN)] = shadow_nn[i];
  }

  // Per-class offsets for metric attacks, learned from shadow scores only.
  std::array<std::map<int, double>, kNumAttacks> class_offset;
  if (options.standardize_per_class) {
    for (const AttackKind kind : {AttackKind::Entropy, AttackKind::MEntropy, AttackKind::GradX}) {
      const auto k = static_cast<std::size_t>(kind);
      std::map<int, std::pair<double, std::size_t>> acc;
      for (const auto& r : shadow_records) {
        acc[r.label].first += r.scores[k];
        acc[r.label].second += 1;
      }
      for (const auto& [label, sum] : acc) {
        class_offset[k][label] = sum.first / static_cast<double>(sum.second);
      }
    }
  }
  auto adjust = [&](PredictionRecord& r) {
    for (std::size_t k = 0; k < kNumAttacks; ++k) {
      if (const auto it = class_offset[k].find(r.label); it != class_offset[k].end()) {
        r.scores[k] -= it->second;
      }
    }
  };
  for (auto& r : shadow_records) adjust(r);

  AttackReport report;
  for (const AttackKind kind : kAttackKinds) {
    const auto k = static_cast<std::size_t>(kind);
    auto& res = report.attacks[k];
    res.kind = kind;
    if (kind == AttackKind::NN) {
      res.threshold = 0.0;  // logit of probability 1/2
    } else {
      std::vector<double> s;
      s.reserve(shadow_records.size());
      for (const auto& r : shadow_records) s.push_back(r.scores[k]);
      res.threshold = median(std::move(s));
    }
  }
  for (auto& r : shadow_records) {
    for (std::size_t k = 0; k < kNumAttacks; ++k) {
      r.attack_correct[k] = (r.scores[k] > report.attacks[k].threshold) == r.is_member;
    }
  }

  // Target half: evaluation only.
  const auto target_in = traced_subset(dataset, split.target_train, "attack_eval", trace);
  const auto target_out = traced_subset(dataset, split.target_test, "attack_eval", trace);
  auto target_in_rec = collect_records(target, target_in, split.target_train, true);
  auto target_out_rec = collect_records(target, target_out, split.target_test, false);
  report.train_acc = accuracy_of(target_in_rec);
  report.test_acc = accuracy_of(target_out_rec);
  score_metrics(target, target_in, target_in_rec);
  score_metrics(target, target_out, target_out_rec);
  auto target_records = concat(std::move(target_in_rec), std::move(target_out_rec));
  const auto target_nn = attacker_scores(attacker, target_records);
  for (std::size_t i = 0; i < target_records.size(); ++i) {
    auto& r = target_records[i];
    r.scores[static_cast<std::size_t>(AttackKind::NN)] = target_nn[i];
    adjust(r);
    for (std::size_t k = 0; k < kNumAttacks; ++k) {
      r.attack_correct[k] = (r.scores[k] > report.attacks[k].threshold) == r.is_member;
      report.attacks[k].scores.push_back({r.sample_id, r.scores[k], r.is_member});
    }
  }
  for (auto& res : report.attacks) res.auc = auc(res.scores);
  report.target_records = std::move(target_records);
  report.shadow_records = std::move(shadow_records);
  return report;
}

}  // namespace srlab
