// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

#include "csiarm/eval/case_study.hpp"
#include "csiarm/eval/metrics.hpp"
#include "csiarm/eval/splits.hpp"
#include "csiarm/synth/corpus.hpp"
#include "support/expect_error.hpp"
#include "support/metrics_oracle.hpp"
#include "support/random_data.hpp"

using namespace csiarm;
using namespace csiarm::eval;

namespace {

pipeline::LabeledDataset labels_only(const std::vector<int>& per_class_counts, int scenario = 1) {
  pipeline::LabeledDataset ds;
  ds.window = 1;
  ds.width = 1;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < per_class_counts[c]; ++i) {
      ds.data.push_back(static_cast<float>(ds.info.size()));
      ds.info.push_back({static_cast<ActionClass>(c), static_cast<std::uint8_t>(scenario), true});
    }
  }
  return ds;
}

}  // namespace

TEST(Metrics, PerfectPredictions) {
  const std::vector<int> t{0, 1, 2, 3, 0, 1, 2, 3};
  const MetricsReport m = compute_metrics(t, t);
  EXPECT_EQ(m.accuracy, 100.0);
  EXPECT_EQ(m.macro_f1, 100.0);
  for (const auto& c : m.per_class) {
    EXPECT_EQ(c.precision, 100.0);
    EXPECT_EQ(c.recall, 100.0);
  }
}

TEST(Metrics, HandCountedTwoClassCase) {
  const std::vector<int> truth{0, 0, 1, 1}, pred{0, 1, 1, 1};
  const MetricsReport m = compute_metrics(pred, truth);
  EXPECT_DOUBLE_EQ(m.per_class[0].precision, 100.0);
  EXPECT_DOUBLE_EQ(m.per_class[0].recall, 50.0);
  EXPECT_NEAR(m.per_class[1].precision, 200.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.per_class[1].recall, 100.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 75.0);
  EXPECT_EQ(m.confusion.counts[0][1], 1u);
}

TEST(Metrics, NeverPredictedClassIsFlagged) {
  const std::vector<int> truth{0, 1, 2, 3}, pred{0, 1, 1, 3};
  const MetricsReport m = compute_metrics(pred, truth);
  EXPECT_EQ(m.per_class[2].precision, 0.0);
  EXPECT_TRUE(m.per_class[2].precision_undefined);
  EXPECT_TRUE(m.any_undefined);
}

TEST(Metrics, Errors) {
  const std::vector<int> a{0, 1}, b{0};
  EXPECT_ERROR_CODE(compute_metrics(a, b), LengthMismatch);
  EXPECT_ERROR_CODE(compute_metrics(std::vector<int>{}, std::vector<int>{}), EmptyInput);
  EXPECT_ERROR_CODE(compute_metrics(std::vector<int>{4}, std::vector<int>{0}), InvalidArgument);
}

TEST(Metrics, MatchesOracleOnRandomSequences) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
    std::vector<int> pred(n), truth(n);
    const bool balanced = trial % 3 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = balanced ? static_cast<int>(i % 4) : std::uniform_int_distribution<int>(0, 3)(rng);
      pred[i] = std::uniform_int_distribution<int>(0, 3)(rng);
    }
    if (balanced) {
      truth.resize(n / 4 * 4 == 0 ? 4 : n / 4 * 4);
      pred.resize(truth.size());
      for (std::size_t i = n; i < truth.size(); ++i) truth[i] = static_cast<int>(i % 4), pred[i] = 0;
    }
    const MetricsReport m = compute_metrics(pred, truth);
    const testkit::OracleMetrics o = testkit::metrics_oracle(pred, truth);
    EXPECT_NEAR(m.accuracy, o.accuracy, 1e-9);
    for (int c = 0; c < 4; ++c) {
      EXPECT_NEAR(m.per_class[c].precision, o.p[c], 1e-9);
      EXPECT_NEAR(m.per_class[c].recall, o.r[c], 1e-9);
      EXPECT_NEAR(m.per_class[c].f1, o.f[c], 1e-9);
      EXPECT_EQ(m.per_class[c].precision_undefined, o.p_undef[c]);
      EXPECT_EQ(m.per_class[c].recall_undefined, o.r_undef[c]);
    }
    if (balanced) EXPECT_EQ(m.accuracy, m.macro_recall);
    std::size_t cells = 0;
    for (const auto& row : m.confusion.counts) {
      for (std::size_t v : row) cells += v;
    }
    EXPECT_EQ(cells, truth.size());
  }
}

TEST(Aggregate, MeanAndPopulationStd) {
  MetricsReport a = compute_metrics(std::vector<int>{0, 1, 2, 3}, std::vector<int>{0, 1, 2, 3});
  a.accuracy = 90.0;
  MetricsReport b = a;
  b.accuracy = 100.0;
  const std::vector<MetricsReport> folds{a, b};
  const AggregateReport r = aggregate_folds(folds);
  EXPECT_EQ(r.folds, 2u);
  EXPECT_DOUBLE_EQ(r.accuracy.mean, 95.0);
  EXPECT_DOUBLE_EQ(r.accuracy.std, 5.0);
  const std::vector<MetricsReport> same{a, a, a};
  EXPECT_EQ(aggregate_folds(same).accuracy.std, 0.0);
  EXPECT_EQ(aggregate_folds(same).accuracy.mean, 90.0);
  EXPECT_ERROR_CODE(aggregate_folds(std::vector<MetricsReport>{}), EmptyInput);
}

TEST(Aggregate, MeanConfusionRowsSumToHundred) {
  std::mt19937_64 rng(2);
  std::vector<MetricsReport> folds;
  for (int f = 0; f < 7; ++f) {
    std::vector<int> p(40), t(40);
    for (int i = 0; i < 40; ++i) t[i] = i % 4, p[i] = std::uniform_int_distribution<int>(0, 3)(rng);
    folds.push_back(compute_metrics(p, t));
  }
  const AggregateReport r = aggregate_folds(folds);
  for (const auto& row : r.mean_confusion_pct) {
    double s = 0.0;
    for (double v : row) s += v;
    EXPECT_NEAR(s, 100.0, 0.01);
  }
}

TEST(Aggregate, LargestConfusionPair) {
  Grid g{};
  g[0][2] = 6.0;
  g[2][0] = 5.0;
  g[1][3] = 10.0;
  const ConfusionPair p = largest_confusion_pair(g);
  EXPECT_EQ(p.a, 0);
  EXPECT_EQ(p.b, 2);
  EXPECT_EQ(p.score, 11.0);
}

TEST(Splits, FourHundredSampleFoldSizes) {
  const auto ds = labels_only({100, 100, 100, 100});
  const auto folds = stratified_kfold(ds, 5, 1);
  ASSERT_EQ(folds.size(), 5u);
  for (const Split& s : folds) {
    ASSERT_EQ(s.test.size(), 80u);
    EXPECT_EQ(s.train.size(), 320u);
    std::array<int, 4> per{};
    for (auto i : s.test) ++per[static_cast<int>(ds.info[i].label)];
    for (int c : per) EXPECT_EQ(c, 20);
  }
  EXPECT_ERROR_CODE(stratified_kfold(ds, 1, 1), TooFewSamples);
  EXPECT_ERROR_CODE(stratified_kfold(labels_only({3, 5, 5, 5}), 4, 1), TooFewSamples);
}

TEST(Splits, PartitionProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = std::uniform_int_distribution<int>(2, 7)(rng);
    std::vector<int> counts(4);
    for (int& c : counts) c = std::uniform_int_distribution<int>(k, 30)(rng);
    const auto ds = labels_only(counts);
    const auto folds = stratified_kfold(ds, k, rng());
    std::vector<int> seen(ds.size(), 0);
    for (const Split& s : folds) {
      EXPECT_TRUE(std::is_sorted(s.test.begin(), s.test.end()));
      EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
      EXPECT_EQ(s.train.size() + s.test.size(), ds.size());
      std::set<std::size_t> tr(s.train.begin(), s.train.end());
      for (auto i : s.test) {
        ++seen[i];
        EXPECT_EQ(tr.count(i), 0u);
      }
    }
    for (int v : seen) EXPECT_EQ(v, 1);
    for (int c = 0; c < 4; ++c) {
      int lo = 1 << 30, hi = 0;
      for (const Split& s : folds) {
        int n = 0;
        for (auto i : s.test) n += static_cast<int>(ds.info[i].label) == c;
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
      EXPECT_LE(hi - lo, 1);
    }
  }
}

TEST(Splits, LeaveOneScenarioOut) {
  std::vector<pipeline::LabeledDataset> per;
  for (int s = 1; s <= 4; ++s) per.push_back(labels_only({100, 100, 100, 100}, s));
  const LosoPlan plan = leave_one_scenario_out(per);
  ASSERT_EQ(plan.splits.size(), 4u);
  EXPECT_EQ(plan.pooled.size(), 1600u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(plan.splits[i].train.size(), 1200u);
    EXPECT_EQ(plan.splits[i].test.size(), 400u);
    for (auto t : plan.splits[i].train) EXPECT_NE(plan.pooled.info[t].scenario_id, plan.held_out[i]);
    for (auto t : plan.splits[i].test) EXPECT_EQ(plan.pooled.info[t].scenario_id, plan.held_out[i]);
  }
  per.pop_back();
  EXPECT_ERROR_CODE(leave_one_scenario_out(per), MissingScenario);
}

// ------------------------------------------------------------ case study

namespace {

StudyConfig tiny_study() {
  StudyConfig cfg;
  cfg.window = 18;
  cfg.stride = 18;
  cfg.per_class = 6;
  cfg.folds = 2;
  cfg.model.input_h = 18;
  cfg.model.input_w = 234;
  cfg.model.filters = {2, 2, 2};
  cfg.model.dense_units = 4;
  cfg.train.max_epochs = 2;
  cfg.train.patience = 1;
  cfg.val_fraction = 0.25;
  return cfg;
}

std::vector<CsiRecording> tiny_corpus(bool with_nlos = true) {
  synth::CorpusPlan plan;
  plan.packets = 6 * 18;
  if (!with_nlos) plan.nlos_scenarios.clear();
  return synth::generate_corpus(synth::default_scene(), plan);
}

}  // namespace

TEST(CaseStudy, CellDatasetAndMissingCell) {
  const auto corpus = tiny_corpus(false);
  const auto ds = cell_dataset(corpus, 3, true, tiny_study());
  EXPECT_EQ(ds.size(), 24u);
  for (const auto& i : ds.info) EXPECT_EQ(i.scenario_id, 3);
  try {
    cell_dataset(corpus, 2, false, tiny_study());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingCell);
    EXPECT_NE(std::string(e.what()).find("nlos"), std::string::npos);
  }
  EXPECT_ERROR_CODE(run_case_study(Study::NlosComparison, corpus, tiny_study()), MissingCell);
}

TEST(CaseStudy, PerScenarioEndToEnd) {
  const auto corpus = tiny_corpus();
  StudyConfig cfg = tiny_study();
  const StudyReport r = run_case_study(Study::PerScenarioCv, corpus, cfg);
  ASSERT_EQ(r.groups.size(), 4u);
  for (int s = 1; s <= 4; ++s) {
    const GroupResult& g = r.group("scenario" + std::to_string(s));
    EXPECT_EQ(g.folds.size(), 2u);
    for (const auto& f : g.folds) EXPECT_EQ(f.test_size, 12u);
  }
  EXPECT_TRUE(check_invariants(r).empty());

  // Same seed, same bytes; thread count does not matter.
  cfg.threads = 2;
  EXPECT_EQ(to_json(run_case_study(Study::PerScenarioCv, corpus, cfg)).dump(), to_json(r).dump());

  const auto dir = std::filesystem::path(::testing::TempDir()) / "per_scenario";
  const auto files = write_study_report(r, dir.string());
  EXPECT_TRUE(std::filesystem::exists(dir / "per-scenario-cv.json"));
  int per_group_json = 0;
  for (const auto& f : files) per_group_json += f.starts_with("per-scenario-cv_scenario") && f.ends_with(".json");
  EXPECT_EQ(per_group_json, 4);
}

TEST(CaseStudy, NlosAndLosoShapes) {
  const auto corpus = tiny_corpus();
  const StudyReport n = run_case_study(Study::NlosComparison, corpus, tiny_study());
  ASSERT_EQ(n.groups.size(), 2u);
  EXPECT_TRUE(n.group("los").los);
  EXPECT_FALSE(n.group("nlos").los);

  const StudyReport l = run_case_study(Study::Loso, corpus, tiny_study());
  ASSERT_EQ(l.groups.size(), 1u);
  const GroupResult& g = l.group("loso");
  ASSERT_EQ(g.folds.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(g.folds[i].held_out_scenario, i + 1);
    EXPECT_EQ(g.folds[i].test_size, 24u);
  }
  const auto j = to_json(l);
  const auto& agg = j["groups"][0]["aggregate"]["per_class"];
  ASSERT_EQ(agg.size(), 4u);
  for (const auto& row : agg) {
    for (const char* k : {"precision", "recall", "f1"}) {
      EXPECT_TRUE(row[k].contains("mean"));
      EXPECT_TRUE(row[k].contains("std"));
    }
  }
  EXPECT_TRUE(check_invariants(l).empty());
}

TEST(CaseStudy, InvariantCheckerFlagsBadReports) {
  StudyReport r;
  GroupResult g;
  FoldResult f;
  f.metrics = compute_metrics(std::vector<int>{0, 1, 2, 3}, std::vector<int>{0, 1, 2, 3});
  f.metrics.accuracy = 101.0;
  g.folds.push_back(f);
  g.aggregate = aggregate_folds(std::vector<MetricsReport>{f.metrics});
  r.groups.push_back(g);
  EXPECT_FALSE(check_invariants(r).empty());
}

TEST(CaseStudy, StudyNames) {
  for (Study s : {Study::PerScenarioCv, Study::NlosComparison, Study::Loso}) EXPECT_EQ(parse_study(to_string(s)), s);
  EXPECT_FALSE(parse_study("holdout").has_value());
}
