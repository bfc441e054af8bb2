// SPDX-License-Identifier: Apache-2.0
#include "csiarm/nn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "csiarm/error.hpp"
#include "csiarm/parallel.hpp"

namespace csiarm::nn {

using pipeline::LabeledDataset;

bool EarlyStopping::update(int epoch, double metric) {
  if (best_epoch_ == 0 || metric > best_) {
    best_ = metric;
    best_epoch_ = epoch;
    return true;
  }
  return false;
}

Tensor4<float> make_batch(const LabeledDataset& ds, std::span<const std::size_t> indices) {
  Tensor4<float> x(static_cast<int>(indices.size()), static_cast<int>(ds.window), static_cast<int>(ds.width), 1);
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const auto s = ds.sample(indices[j]);
    std::copy(s.begin(), s.end(), x.sample(static_cast<int>(j)));
  }
  return x;
}

std::vector<int> labels_of(const LabeledDataset& ds, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(code(ds.info[i].label));
  return out;
}

namespace {

void check_dataset(const CnnModel& model, const LabeledDataset& ds, const char* what) {
  if (ds.size() == 0) fail(ErrorCode::EmptyDataset, std::string(what) + " set is empty");
  const ModelConfig& c = model.config();
  if (static_cast<int>(ds.window) != c.input_h || static_cast<int>(ds.width) != c.input_w || c.input_c != 1) {
    fail(ErrorCode::ShapeMismatch, std::string(what) + " samples are " + std::to_string(ds.window) + "x" +
                                       std::to_string(ds.width) + ", model expects " + std::to_string(c.input_h) +
                                       "x" + std::to_string(c.input_w));
  }
}

}  // namespace

std::vector<int> predict(CnnModel& model, const LabeledDataset& ds, int batch_size) {
  std::vector<int> preds;
  preds.reserve(ds.size());
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t bs = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t first = 0; first < ds.size(); first += bs) {
    const std::size_t count = std::min(bs, ds.size() - first);
    const Tensor4<float> logits = model.forward(make_batch(ds, std::span(idx).subspan(first, count)), false);
    for (int b = 0; b < logits.n; ++b) {
      const float* row = logits.sample(b);
      preds.push_back(static_cast<int>(std::max_element(row, row + logits.c) - row));
    }
  }
  return preds;
}

double accuracy(std::span<const int> preds, const LabeledDataset& ds) {
  if (preds.size() != ds.size()) fail(ErrorCode::LengthMismatch, "one prediction per sample");
  if (preds.empty()) fail(ErrorCode::EmptyInput, "no predictions");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == code(ds.info[i].label) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

History train(CnnModel& model, const LabeledDataset& train_set, const LabeledDataset& val_set,
              const TrainConfig& cfg) {
  check_dataset(model, train_set, "training");
  check_dataset(model, val_set, "validation");
  if (cfg.batch_size < 1) fail(ErrorCode::InvalidArgument, "batch size must be >= 1");
  if (cfg.max_epochs < 1) fail(ErrorCode::InvalidArgument, "max epochs must be >= 1");
  if (cfg.patience < 1 || cfg.patience >= cfg.max_epochs) {
    fail(ErrorCode::InvalidArgument, "patience must be in [1, max_epochs)");
  }

  Optimizer<float> opt(cfg.optimizer, cfg.learning_rate, cfg.hyper);
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x5348));
  std::mt19937_64 dropout_rng(derive_seed(cfg.seed, 0x4452));
  EarlyStopping stopper(cfg.patience);
  History hist;
  std::vector<std::vector<float>> best_weights = model.snapshot();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t first = 0; first < order.size(); first += bs) {
      const std::size_t count = std::min(bs, order.size() - first);
      const auto idx = std::span<const std::size_t>(order).subspan(first, count);
      const double loss = model.loss_and_grad(make_batch(train_set, idx), labels_of(train_set, idx), dropout_rng);
      if (!std::isfinite(loss)) {
        fail(ErrorCode::NonFinite, "training loss diverged in epoch " + std::to_string(epoch));
      }
      loss_sum += loss * static_cast<double>(count);
      opt.step(model.params());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    const std::vector<int> preds = predict(model, val_set);
    rec.val_acc = accuracy(preds, val_set);
    if (cfg.val_accuracy_override) rec.val_acc = cfg.val_accuracy_override(epoch, rec.val_acc);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    hist.epochs.push_back(rec);
    if (cfg.on_epoch_end) cfg.on_epoch_end(rec);

    if (stopper.update(epoch, rec.val_acc)) best_weights = model.snapshot();
    if (stopper.should_stop(epoch)) {
      hist.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  hist.best_epoch = stopper.best_epoch();
  hist.best_val_acc = stopper.best();
  model.restore(best_weights);
  return hist;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(const LabeledDataset& ds,
                                                                                 double fraction,
                                                                                 std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorCode::InvalidArgument, "holdout fraction must be in (0, 1)");
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(code(ds.info[i].label))].push_back(i);
  std::mt19937_64 rng(derive_seed(seed, 0x484f4c44));
  std::vector<std::size_t> keep, held;
  for (auto& idx : by_class) {
    if (idx.empty()) continue;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t n_held = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    if (idx.size() >= 2) n_held = std::clamp<std::size_t>(n_held, 1, idx.size() - 1);
    held.insert(held.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_held));
    keep.insert(keep.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_held), idx.end());
  }
  std::sort(keep.begin(), keep.end());
  std::sort(held.begin(), held.end());
  return {std::move(keep), std::move(held)};
}

void write_history_csv(const std::string& path, const History& h) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out.precision(10);
  out << "epoch,train_loss,val_acc\n";
  for (const EpochRecord& e : h.epochs) out << e.epoch << ',' << e.train_loss << ',' << e.val_acc << '\n';
  if (!out) fail(ErrorCode::Io, "short write to " + path);
}

}  // namespace csiarm::nn
