// SPDX-License-Identifier: Apache-2.0
//
// Classification metrics in percent over the four action classes, rows of
// the confusion matrix being true classes in code order.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "csiarm/csi/types.hpp"

namespace csiarm::eval {

using Grid = std::array<std::array<double, kNumClasses>, kNumClasses>;

struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const;
  std::size_t row_total(int truth) const;
  /// Each true-class row scaled to sum to 100; rows without samples stay 0.
  Grid percentages() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the ratio had a zero denominator and was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  bool any_undefined = false;
  ConfusionMatrix confusion;
};

/// Throws LengthMismatch, EmptyInput, and InvalidArgument for labels outside 0..3.
MetricsReport compute_metrics(std::span<const int> preds, std::span<const int> truths);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population
};

Stat mean_std(std::span<const double> xs);

struct ClassStats {
  Stat precision;
  Stat recall;
  Stat f1;
};

struct AggregateReport {
  std::size_t folds = 0;
  std::array<ClassStats, kNumClasses> per_class{};
  Stat macro_precision;
  Stat macro_recall;
  Stat macro_f1;
  Stat accuracy;
  Grid mean_confusion_pct{};  // elementwise mean of per-fold percentages
};

/// Throws EmptyInput.
AggregateReport aggregate_folds(std::span<const MetricsReport> reports);

/// Largest symmetric off-diagonal pair (a < b) of a percentage matrix,
/// scoring M[a][b] + M[b][a]. Ties keep the lowest (a, b).
struct ConfusionPair {
  int a = 0;
  int b = 1;
  double score = 0.0;
};
ConfusionPair largest_confusion_pair(const Grid& pct);

}  // namespace csiarm::eval
