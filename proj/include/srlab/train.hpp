#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srlab/dataset.hpp"
#include "srlab/defenses.hpp"
#include "srlab/model.hpp"
#include "srlab/optimizer.hpp"

namespace srlab {

enum class LrSchedule {
  Constant,
  Step,  // x0.1 at 50% and again at 75% of the epochs
};

std::string to_string(LrSchedule s);
LrSchedule parse_lr_schedule(std::string_view name);
double lr_multiplier(LrSchedule s, std::size_t epoch, std::size_t epochs);

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;  // batch order and dropout masks
  LrSchedule schedule = LrSchedule::Step;
};

struct EarlyStopping {
  std::size_t patience = 10;
  double min_delta = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;  // running accuracy over the epoch's batches
  std::optional<double> monitor_loss;
  std::optional<double> monitor_acc;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  bool stopped_early = false;
  std::optional<std::size_t> best_epoch;
  friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Softmax probabilities in Eval semantics; the model must be in Eval mode.
Matrix predict_probs(const Model& model, const Matrix& features, std::size_t batch = 512);
EvalResult evaluate(const Model& model, const TabularDataset& data, std::size_t batch = 512);

// Mini-batch SGD over `train`. When `monitor` is given it is evaluated after
// every epoch; with `early_stop` as well, training halts per
// early_stopping_check and the parameters of the best monitored epoch are
// restored. The model is left in Eval mode.
TrainLog train_epochs(Model& model, const TabularDataset& train, OptimizerState& opt,
                      const TrainOptions& options, const LossFn& loss,
                      const TabularDataset* monitor = nullptr,
                      std::optional<EarlyStopping> early_stop = std::nullopt);

}  // namespace srlab
