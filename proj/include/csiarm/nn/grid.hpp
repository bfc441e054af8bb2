// SPDX-License-Identifier: Apache-2.0
//
// Optimizer x learning-rate sweep. Every cell starts from the same initial
// weights and trains on the same split, so cells are independent of the
// order (or thread) they run in.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csiarm/nn/training.hpp"

namespace csiarm::nn {

/// {0.001} followed by 0.01, 0.02, ..., 0.10.
std::vector<double> default_learning_rates();

struct GridSpec {
  std::vector<OptimizerKind> optimizers{kAllOptimizers.begin(), kAllOptimizers.end()};
  std::vector<double> learning_rates = default_learning_rates();
};

struct GridCell {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 0.0;
  bool ok = false;
  double val_acc = 0.0;  // of the restored best weights
  int epochs = 0;
  int best_epoch = 0;
  std::string error;
};

struct GridReport {
  GridSpec spec;
  std::vector<GridCell> cells;  // optimizer-major, learning rates inner

  const GridCell& at(OptimizerKind k, double lr) const;
};

/// `base` supplies everything but optimizer and learning rate. A cell whose
/// training throws is recorded as failed and the sweep carries on.
GridReport grid_search(const ModelConfig& model_cfg, std::uint64_t init_seed,
                       const pipeline::LabeledDataset& train_set, const pipeline::LabeledDataset& val_set,
                       const TrainConfig& base, const GridSpec& spec = {}, int threads = 1);

/// optimizer,learning_rate,status,val_acc,epochs,best_epoch,error
std::string grid_csv(const GridReport& r);
/// Optimizers as rows, learning rates as columns, validation accuracy in %.
std::string grid_table(const GridReport& r);

}  // namespace csiarm::nn
