// SPDX-License-Identifier: Apache-2.0
//
// The three evaluation studies over a labeled corpus:
//
//   per-scenario-cv  stratified k-fold inside each LOS scenario
//   nlos-comparison  the same protocol on one scenario with and without the obstacle
//   loso             train on three scenarios, test on the fourth
//
// Every fold normalizes with stats fitted on its training part, holds out a
// stratified validation share of that part for early stopping, and starts
// from fresh weights seeded by (study seed, group, fold).
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "csiarm/eval/metrics.hpp"
#include "csiarm/eval/splits.hpp"
#include "csiarm/nn/checkpoint.hpp"
#include "csiarm/nn/training.hpp"
#include "csiarm/pipeline/pipeline.hpp"

namespace csiarm::eval {

enum class Study { PerScenarioCv, NlosComparison, Loso };

std::string_view to_string(Study s);
std::optional<Study> parse_study(std::string_view s);

struct StudyConfig {
  nn::ModelConfig model;
  nn::TrainConfig train;
  std::size_t window = pipeline::kDefaultWindow;
  std::size_t stride = 97;  // 10000 packets -> 101 windows, enough for 100 per class
  std::size_t per_class = 100;  // 0: balance to the smallest class
  pipeline::NormMode norm = pipeline::NormMode::PerSampleStandardize;
  int folds = 5;
  double val_fraction = 0.2;
  std::uint64_t seed = 1;
  std::vector<int> scenarios{1, 2, 3, 4};
  int nlos_scenario = 2;
  int threads = 1;  // folds run concurrently up to this many
  std::function<void(const std::string&)> log;
};

struct FoldResult {
  int fold = 0;
  int held_out_scenario = 0;  // loso only
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  std::size_t test_size = 0;
  nn::History history;
  MetricsReport metrics;
};

struct GroupResult {
  std::string name;
  int scenario = 0;  // 0 for pooled groups
  bool los = true;
  std::vector<FoldResult> folds;
  AggregateReport aggregate;
};

struct StudyReport {
  Study study = Study::PerScenarioCv;
  std::vector<GroupResult> groups;
  nlohmann::json config;
  double seconds = 0.0;  // wall time; kept out of the JSON so reports stay reproducible

  const GroupResult& group(std::string_view name) const;
};

/// Balanced dataset for one (scenario, los) cell of the corpus. Throws
/// MissingCell naming the first absent (scenario, action, los) coordinate.
pipeline::LabeledDataset cell_dataset(std::span<const CsiRecording> corpus, int scenario, bool los,
                                      const StudyConfig& cfg);

/// Normalize, hold out validation, train from fresh weights, score `test`.
/// When `keep` is set it receives the trained model and its norm stats.
FoldResult train_and_score(const pipeline::LabeledDataset& train_part, const pipeline::LabeledDataset& test,
                           const StudyConfig& cfg, std::uint64_t fold_seed,
                           std::optional<nn::Checkpoint>* keep = nullptr);

/// k-fold cross-validation over one dataset.
GroupResult run_cv_group(const pipeline::LabeledDataset& ds, std::string name, int scenario, bool los,
                         const StudyConfig& cfg);

GroupResult run_loso_group(std::span<const pipeline::LabeledDataset> per_scenario, const StudyConfig& cfg);

StudyReport run_case_study(Study study, std::span<const CsiRecording> corpus, const StudyConfig& cfg);

nlohmann::json to_json(const MetricsReport& m);
nlohmann::json to_json(const AggregateReport& a);
nlohmann::json to_json(const StudyReport& r);
nlohmann::json config_json(const StudyConfig& cfg);

/// Report-level invariants: metrics within [0, 100], percentage confusion
/// rows summing to 100 (+-0.01), accuracy equal to macro recall on folds
/// whose test set is class-balanced. Returns one message per violation.
std::vector<std::string> check_invariants(const StudyReport& r);

/// Rows = true class, columns = predicted class, in percent.
std::string confusion_text(const Grid& pct, std::string_view title);

/// Writes JSON, CSV tables and text confusion grids into `dir` (created if
/// needed). Returns the file names written.
std::vector<std::string> write_study_report(const StudyReport& r, const std::string& dir);

}  // namespace csiarm::eval
