// SPDX-License-Identifier: Apache-2.0
#include "csiarm/eval/metrics.hpp"

#include <cmath>
#include <string>

#include "csiarm/error.hpp"

namespace csiarm::eval {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) {
    for (std::size_t v : row) n += v;
  }
  return n;
}

std::size_t ConfusionMatrix::row_total(int truth) const {
  std::size_t n = 0;
  for (std::size_t v : counts[static_cast<std::size_t>(truth)]) n += v;
  return n;
}

Grid ConfusionMatrix::percentages() const {
  Grid out{};
  for (int t = 0; t < kNumClasses; ++t) {
    const std::size_t row = row_total(t);
    if (row == 0) continue;
    for (int p = 0; p < kNumClasses; ++p) {
      out[t][p] = 100.0 * static_cast<double>(counts[t][p]) / static_cast<double>(row);
    }
  }
  return out;
}

MetricsReport compute_metrics(std::span<const int> preds, std::span<const int> truths) {
  if (preds.size() != truths.size()) {
    fail(ErrorCode::LengthMismatch, std::to_string(preds.size()) + " predictions for " +
                                        std::to_string(truths.size()) + " labels");
  }
  if (preds.empty()) fail(ErrorCode::EmptyInput, "no labels to score");

  MetricsReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] >= kNumClasses || truths[i] < 0 || truths[i] >= kNumClasses) {
      fail(ErrorCode::InvalidArgument, "label outside 0..3 at position " + std::to_string(i));
    }
    ++r.confusion.counts[static_cast<std::size_t>(truths[i])][static_cast<std::size_t>(preds[i])];
  }

  std::size_t correct = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const double tp = static_cast<double>(r.confusion.counts[c][c]);
    double pred_c = 0.0;
    for (int t = 0; t < kNumClasses; ++t) pred_c += static_cast<double>(r.confusion.counts[t][c]);
    const double true_c = static_cast<double>(r.confusion.row_total(c));
    correct += r.confusion.counts[c][c];

    ClassMetrics& m = r.per_class[static_cast<std::size_t>(c)];
    if (pred_c > 0.0) {
      m.precision = 100.0 * tp / pred_c;
    } else {
      m.precision_undefined = true;
    }
    if (true_c > 0.0) {
      m.recall = 100.0 * tp / true_c;
    } else {
      m.recall_undefined = true;
    }
    if (m.precision + m.recall > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
      m.f1_undefined = true;
    }
    r.any_undefined = r.any_undefined || m.precision_undefined || m.recall_undefined || m.f1_undefined;
    r.macro_precision += m.precision / kNumClasses;
    r.macro_recall += m.recall / kNumClasses;
    r.macro_f1 += m.f1 / kNumClasses;
  }
  r.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(preds.size());
  // With equal class supports the recall mean has the common denominator
  // 4n; summing numerators first keeps it exact rather than rounding per class.
  bool balanced = true;
  for (int c = 1; c < kNumClasses; ++c) balanced = balanced && r.confusion.row_total(c) == r.confusion.row_total(0);
  if (balanced) {
    std::size_t tp_sum = 0;
    for (int c = 0; c < kNumClasses; ++c) tp_sum += r.confusion.counts[c][c];
    r.macro_recall = 100.0 * static_cast<double>(tp_sum) /
                     static_cast<double>(kNumClasses * r.confusion.row_total(0));
  }
  return r;
}

Stat mean_std(std::span<const double> xs) {
  if (xs.empty()) fail(ErrorCode::EmptyInput, "no values");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

AggregateReport aggregate_folds(std::span<const MetricsReport> reports) {
  if (reports.empty()) fail(ErrorCode::EmptyInput, "no fold reports to aggregate");
  AggregateReport agg;
  agg.folds = reports.size();
  std::vector<double> buf(reports.size());
  auto stat = [&](auto field) {
    for (std::size_t i = 0; i < reports.size(); ++i) buf[i] = field(reports[i]);
    return mean_std(buf);
  };
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    agg.per_class[c].precision = stat([c](const MetricsReport& r) { return r.per_class[c].precision; });
    agg.per_class[c].recall = stat([c](const MetricsReport& r) { return r.per_class[c].recall; });
    agg.per_class[c].f1 = stat([c](const MetricsReport& r) { return r.per_class[c].f1; });
  }
  agg.macro_precision = stat([](const MetricsReport& r) { return r.macro_precision; });
  agg.macro_recall = stat([](const MetricsReport& r) { return r.macro_recall; });
  agg.macro_f1 = stat([](const MetricsReport& r) { return r.macro_f1; });
  agg.accuracy = stat([](const MetricsReport& r) { return r.accuracy; });

  for (const MetricsReport& r : reports) {
    const Grid pct = r.confusion.percentages();
    for (int t = 0; t < kNumClasses; ++t) {
      for (int p = 0; p < kNumClasses; ++p) agg.mean_confusion_pct[t][p] += pct[t][p];
    }
  }
  for (auto& row : agg.mean_confusion_pct) {
    for (double& v : row) v /= static_cast<double>(reports.size());
  }
  return agg;
}

ConfusionPair largest_confusion_pair(const Grid& pct) {
  ConfusionPair best{0, 1, -1.0};
  for (int a = 0; a < kNumClasses; ++a) {
    for (int b = a + 1; b < kNumClasses; ++b) {
      const double s = pct[a][b] + pct[b][a];
      if (s > best.score) best = {a, b, s};
    }
  }
  return best;
}

}  // namespace csiarm::eval
