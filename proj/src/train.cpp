#include "srlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "srlab/errors.hpp"
#include "srlab/loss.hpp"

namespace srlab {

std::string to_string(LrSchedule s) { return s == LrSchedule::Step ? "step" : "constant"; }

LrSchedule parse_lr_schedule(std::string_view name) {
  if (name == "step") return LrSchedule::Step;
  if (name == "constant") return LrSchedule::Constant;
  throw ConfigError(fmt::format("optimizer.schedule: unknown schedule '{}'", name));
}

double lr_multiplier(LrSchedule s, std::size_t epoch, std::size_t epochs) {
  if (s == LrSchedule::Constant) return 1.0;
  if (4 * epoch >= 3 * epochs) return 0.01;
  if (2 * epoch >= epochs) return 0.1;
  return 1.0;
}

namespace {

// Single-logit models predict class 1 when the logit is positive.
std::size_t argmax(std::span<const double> row) {
  if (row.size() == 1) return row[0] > 0.0 ? 1 : 0;
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

Matrix predict_probs(const Model& model, const Matrix& features, std::size_t batch) {
  if (model.mode() != Mode::Eval) throw StateError("predict_probs needs a model in Eval mode");
  Matrix probs(features.rows(), model.output_width());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < features.rows(); start += batch) {
    const std::size_t end = std::min(features.rows(), start + batch);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Matrix p = softmax(model.forward(gather_rows(features, idx)).logits);
    std::copy(p.values().begin(), p.values().end(), probs.row(start).begin());
  }
  return probs;
}

EvalResult evaluate(const Model& model, const TabularDataset& data, std::size_t batch) {
  if (data.size() == 0) throw InputError("evaluate: empty dataset");
  const Matrix probs = predict_probs(model, data.features, batch);
  EvalResult r;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = probs.row(i);
    const auto y = static_cast<std::size_t>(data.labels[i]);
    if (argmax(p) == y) ++correct;
    r.loss -= std::log(std::max(p[y], 1e-300));
  }
  r.loss /= static_cast<double>(data.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return r;
}

TrainLog train_epochs(Model& model, const TabularDataset& train, OptimizerState& opt,
                      const TrainOptions& options, const LossFn& loss,
                      const TabularDataset* monitor, std::optional<EarlyStopping> early_stop) {
  if (train.size() == 0) throw InputError("train_epochs: empty dataset");
  if (options.batch_size == 0) throw ConfigError("optimizer.batch_size must be positive");
  if (early_stop && monitor == nullptr) {
    throw ConfigError("early stopping needs a monitor set");
  }
  TrainLog log;
  if (options.epochs == 0) {
    model.set_mode(Mode::Eval);
    return log;
  }

  Rng order_rng(options.seed);
  Rng dropout_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  const double base_lr = opt.learning_rate;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> monitor_history;
  std::vector<Matrix> best_params;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    opt.learning_rate = base_lr * lr_multiplier(options.schedule, epoch, options.epochs);
    std::shuffle(order.begin(), order.end(), order_rng);
    model.set_mode(Mode::Train);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = opt.learning_rate;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<int> labels;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix x = gather_rows(train.features, idx);
      labels.clear();
      for (const std::size_t i : idx) labels.push_back(train.labels[i]);

      auto fwd = model.forward(x, &dropout_rng);
      const LossResult l = loss(fwd.logits, labels);
      const Gradients grads = model.backward(fwd.cache, l.dlogits, false);
      sgd_step(model, grads, opt);

      loss_sum += l.loss * static_cast<double>(idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r) {
        if (argmax(fwd.logits.row(r)) == static_cast<std::size_t>(labels[r])) ++correct;
      }
    }
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());

    model.set_mode(Mode::Eval);
    if (monitor != nullptr) {
      const EvalResult m = evaluate(model, *monitor);
      rec.monitor_loss = m.loss;
      rec.monitor_acc = m.accuracy;
      monitor_history.push_back(m.accuracy);
    }
    log.epochs.push_back(rec);

    if (early_stop) {
      const auto decision =
          early_stopping_check(monitor_history, early_stop->patience, early_stop->min_delta);
      if (decision.best_epoch == epoch) {
        best_params.clear();
        for (const Matrix* p : model.parameters()) best_params.push_back(*p);
      }
      log.best_epoch = decision.best_epoch;
      if (decision.stop) {
        log.stopped_early = true;
        break;
      }
    }
  }
  if (early_stop && !best_params.empty()) {
    auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best_params[i];
  }
  opt.learning_rate = base_lr;
  model.set_mode(Mode::Eval);
  return log;
}

}  // namespace srlab
