// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csiarm/nn/model.hpp"
#include "csiarm/nn/optimizer.hpp"
#include "csiarm/pipeline/pipeline.hpp"

namespace csiarm::nn {

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_acc = 0.0;  // fraction in [0, 1]
  double seconds = 0.0;
};

struct TrainConfig {
  int batch_size = 16;
  int max_epochs = 50;
  int patience = 6;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 0.001;
  OptimizerHyper hyper{};
  std::uint64_t seed = 1;

  /// Test hook: replaces the measured validation accuracy of an epoch.
  std::function<double(int epoch, double measured)> val_accuracy_override;
  std::function<void(const EpochRecord&)> on_epoch_end;
};

struct History {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_acc = 0.0;
  bool stopped_early = false;
};

/// Patience counter on a maximized metric. Only strict improvements reset it.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Records the metric for `epoch`; true when it is a new best.
  bool update(int epoch, double metric);
  bool should_stop(int epoch) const { return best_epoch_ > 0 && epoch - best_epoch_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best() const { return best_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_ = 0.0;
};

/// Gathers the listed samples into a (count, U, W', 1) batch.
Tensor4<float> make_batch(const pipeline::LabeledDataset& ds, std::span<const std::size_t> indices);
std::vector<int> labels_of(const pipeline::LabeledDataset& ds, std::span<const std::size_t> indices);

/// Mini-batch training with per-epoch shuffling, early stopping on
/// validation accuracy and restoration of the best weights. Deterministic
/// in cfg.seed. Throws EmptyDataset, ShapeMismatch, NonFinite.
History train(CnnModel& model, const pipeline::LabeledDataset& train_set, const pipeline::LabeledDataset& val_set,
              const TrainConfig& cfg);

std::vector<int> predict(CnnModel& model, const pipeline::LabeledDataset& ds, int batch_size = 32);
double accuracy(std::span<const int> preds, const pipeline::LabeledDataset& ds);

/// Stratified holdout: about `fraction` of each class goes to the second
/// set (at least one sample when the class has two or more).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const pipeline::LabeledDataset& ds, double fraction, std::uint64_t seed);

void write_history_csv(const std::string& path, const History& h);

}  // namespace csiarm::nn
