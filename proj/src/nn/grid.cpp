// SPDX-License-Identifier: Apache-2.0
#include "csiarm/nn/grid.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "csiarm/error.hpp"
#include "csiarm/parallel.hpp"

namespace csiarm::nn {

std::vector<double> default_learning_rates() {
  std::vector<double> lrs{0.001};
  for (int i = 1; i <= 10; ++i) lrs.push_back(0.01 * i);
  return lrs;
}

const GridCell& GridReport::at(OptimizerKind k, double lr) const {
  for (const GridCell& c : cells) {
    if (c.optimizer == k && std::abs(c.learning_rate - lr) <= 1e-12 * std::max(1.0, lr)) return c;
  }
  fail(ErrorCode::MissingCell, "no grid cell for " + std::string(to_string(k)) + " at lr " + std::to_string(lr));
}

GridReport grid_search(const ModelConfig& model_cfg, std::uint64_t init_seed, const pipeline::LabeledDataset& train_set,
                       const pipeline::LabeledDataset& val_set, const TrainConfig& base, const GridSpec& spec,
                       int threads) {
  if (spec.optimizers.empty() || spec.learning_rates.empty()) {
    fail(ErrorCode::InvalidArgument, "grid needs at least one optimizer and one learning rate");
  }
  CnnModel init(model_cfg);
  init.init(init_seed);
  const auto initial = init.snapshot();

  GridReport report;
  report.spec = spec;
  for (OptimizerKind k : spec.optimizers) {
    for (double lr : spec.learning_rates) report.cells.push_back({k, lr, false, 0.0, 0, 0, {}});
  }

  parallel_for(report.cells.size(), threads, [&](std::size_t i) {
    GridCell& cell = report.cells[i];
    try {
      CnnModel model(model_cfg);
      model.restore(initial);
      TrainConfig cfg = base;
      cfg.optimizer = cell.optimizer;
      cfg.learning_rate = cell.learning_rate;
      const History h = train(model, train_set, val_set, cfg);
      cell.epochs = static_cast<int>(h.epochs.size());
      cell.best_epoch = h.best_epoch;
      const auto preds = predict(model, val_set);
      cell.val_acc = accuracy(preds, val_set);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });
  return report;
}

std::string grid_csv(const GridReport& r) {
  std::ostringstream os;
  os << "optimizer,learning_rate,status,val_acc,epochs,best_epoch,error\n";
  for (const GridCell& c : r.cells) {
    std::string err = c.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    }
    char lr[32];
    std::snprintf(lr, sizeof lr, "%.3f", c.learning_rate);
    os << to_string(c.optimizer) << ',' << lr << ',' << (c.ok ? "ok" : "failed") << ',' << c.val_acc << ','
       << c.epochs << ',' << c.best_epoch << ',' << err << '\n';
  }
  return os.str();
}

std::string grid_table(const GridReport& r) {
  std::ostringstream os;
  char buf[32];
  os << "val_acc %   ";
  for (double lr : r.spec.learning_rates) {
    std::snprintf(buf, sizeof buf, "%8.3f", lr);
    os << buf;
  }
  os << '\n';
  for (OptimizerKind k : r.spec.optimizers) {
    std::snprintf(buf, sizeof buf, "%-12s", std::string(to_string(k)).c_str());
    os << buf;
    for (double lr : r.spec.learning_rates) {
      const GridCell& c = r.at(k, lr);
      if (c.ok) {
        std::snprintf(buf, sizeof buf, "%8.2f", 100.0 * c.val_acc);
      } else {
        std::snprintf(buf, sizeof buf, "%8s", "fail");
      }
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace csiarm::nn
