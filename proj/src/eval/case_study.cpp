// SPDX-License-Identifier: Apache-2.0
#include "csiarm/eval/case_study.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csiarm/error.hpp"
#include "csiarm/parallel.hpp"

namespace csiarm::eval {

using pipeline::LabeledDataset;
using nlohmann::json;

std::string_view to_string(Study s) {
  switch (s) {
    case Study::PerScenarioCv: return "per-scenario-cv";
    case Study::NlosComparison: return "nlos-comparison";
    case Study::Loso: return "loso";
  }
  return "?";
}

std::optional<Study> parse_study(std::string_view s) {
  for (Study st : {Study::PerScenarioCv, Study::NlosComparison, Study::Loso}) {
    if (s == to_string(st)) return st;
  }
  return std::nullopt;
}

const GroupResult& StudyReport::group(std::string_view name) const {
  for (const GroupResult& g : groups) {
    if (g.name == name) return g;
  }
  fail(ErrorCode::InvalidArgument, "report has no group " + std::string(name));
}

namespace {

void log(const StudyConfig& cfg, const std::string& msg) {
  if (cfg.log) cfg.log(msg);
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

LabeledDataset cell_dataset(std::span<const CsiRecording> corpus, int scenario, bool los, const StudyConfig& cfg) {
  std::vector<CsiRecording> picked;
  for (const CsiRecording& r : corpus) {
    if (r.scenario_id == scenario && r.los == los) picked.push_back(r);
  }
  for (ActionClass a : kAllActions) {
    const bool present = std::any_of(picked.begin(), picked.end(), [a](const CsiRecording& r) { return r.label == a; });
    if (!present) {
      fail(ErrorCode::MissingCell, "no recording for (scenario " + std::to_string(scenario) + ", " +
                                       std::string(to_string(a)) + ", " + (los ? "los" : "nlos") + ")");
    }
  }
  pipeline::AssembleOptions opt;
  opt.window = cfg.window;
  opt.stride = cfg.stride;
  if (cfg.per_class > 0) opt.per_class_cap = cfg.per_class;
  return pipeline::assemble(picked, opt);
}

FoldResult train_and_score(const LabeledDataset& train_part, const LabeledDataset& test, const StudyConfig& cfg,
                           std::uint64_t fold_seed, std::optional<nn::Checkpoint>* keep) {
  FoldResult out;
  auto normalized = pipeline::normalize(train_part, cfg.norm);
  LabeledDataset test_n = test;
  pipeline::apply_normalization(test_n, normalized.stats);

  const auto [fit_idx, val_idx] = nn::stratified_holdout(normalized.dataset, cfg.val_fraction, fold_seed);
  const LabeledDataset fit = normalized.dataset.subset(fit_idx);
  const LabeledDataset val = normalized.dataset.subset(val_idx);
  normalized.dataset = LabeledDataset{};

  nn::ModelConfig mc = cfg.model;
  mc.input_h = static_cast<int>(train_part.window);
  mc.input_w = static_cast<int>(train_part.width);
  mc.input_c = 1;
  nn::CnnModel model(mc);
  model.init(derive_seed(fold_seed, 1));
  nn::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(fold_seed, 2);

  out.train_size = fit.size();
  out.val_size = val.size();
  out.test_size = test.size();
  out.history = nn::train(model, fit, val, tc);

  const std::vector<int> preds = nn::predict(model, test_n);
  std::vector<int> truths;
  truths.reserve(test_n.size());
  for (const auto& info : test_n.info) truths.push_back(code(info.label));
  out.metrics = compute_metrics(preds, truths);
  if (keep) keep->emplace(nn::Checkpoint{std::move(model), normalized.stats});
  return out;
}

GroupResult run_cv_group(const LabeledDataset& ds, std::string name, int scenario, bool los, const StudyConfig& cfg) {
  GroupResult g;
  g.name = std::move(name);
  g.scenario = scenario;
  g.los = los;
  const std::uint64_t group_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(scenario), los ? 1 : 0);
  const auto splits = stratified_kfold(ds, cfg.folds, group_seed);
  g.folds.resize(splits.size());
  parallel_for(splits.size(), cfg.threads, [&](std::size_t f) {
    log(cfg, g.name + ": fold " + std::to_string(f + 1) + "/" + std::to_string(splits.size()));
    const LabeledDataset train_part = ds.subset(splits[f].train);
    const LabeledDataset test = ds.subset(splits[f].test);
    g.folds[f] = train_and_score(train_part, test, cfg, derive_seed(group_seed, f + 1));
    g.folds[f].fold = static_cast<int>(f + 1);
    log(cfg, g.name + ": fold " + std::to_string(f + 1) + " accuracy " + fmt2(g.folds[f].metrics.accuracy) +
                 "% after " + std::to_string(g.folds[f].history.epochs.size()) + " epochs");
  });
  std::vector<MetricsReport> reports;
  for (const FoldResult& f : g.folds) reports.push_back(f.metrics);
  g.aggregate = aggregate_folds(reports);
  return g;
}

GroupResult run_loso_group(std::span<const LabeledDataset> per_scenario, const StudyConfig& cfg) {
  const LosoPlan plan = leave_one_scenario_out(per_scenario);
  GroupResult g;
  g.name = "loso";
  g.scenario = 0;
  g.los = true;
  g.folds.resize(plan.splits.size());
  parallel_for(plan.splits.size(), cfg.threads, [&](std::size_t f) {
    const int held = plan.held_out[f];
    log(cfg, "loso: testing on scenario " + std::to_string(held));
    const LabeledDataset train_part = plan.pooled.subset(plan.splits[f].train);
    const LabeledDataset test = plan.pooled.subset(plan.splits[f].test);
    g.folds[f] = train_and_score(train_part, test, cfg, derive_seed(cfg.seed, 0x4c4f534f, static_cast<std::uint64_t>(held)));
    g.folds[f].fold = static_cast<int>(f + 1);
    g.folds[f].held_out_scenario = held;
    log(cfg, "loso: scenario " + std::to_string(held) + " accuracy " + fmt2(g.folds[f].metrics.accuracy) + "%");
  });
  std::vector<MetricsReport> reports;
  for (const FoldResult& f : g.folds) reports.push_back(f.metrics);
  g.aggregate = aggregate_folds(reports);
  return g;
}

StudyReport run_case_study(Study study, std::span<const CsiRecording> corpus, const StudyConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  StudyReport r;
  r.study = study;
  r.config = config_json(cfg);
  switch (study) {
    case Study::PerScenarioCv: {
      // Check every cell before spending time on training.
      for (int s : cfg.scenarios) (void)cell_dataset(corpus, s, true, cfg).size();
      for (int s : cfg.scenarios) {
        const LabeledDataset ds = cell_dataset(corpus, s, true, cfg);
        r.groups.push_back(run_cv_group(ds, "scenario" + std::to_string(s), s, true, cfg));
      }
      break;
    }
    case Study::NlosComparison: {
      const int s = cfg.nlos_scenario;
      const LabeledDataset los = cell_dataset(corpus, s, true, cfg);
      const LabeledDataset nlos = cell_dataset(corpus, s, false, cfg);
      r.groups.push_back(run_cv_group(los, "los", s, true, cfg));
      r.groups.push_back(run_cv_group(nlos, "nlos", s, false, cfg));
      break;
    }
    case Study::Loso: {
      std::vector<LabeledDataset> per;
      for (int s = 1; s <= 4; ++s) per.push_back(cell_dataset(corpus, s, true, cfg));
      r.groups.push_back(run_loso_group(per, cfg));
      break;
    }
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// ------------------------------------------------------------------ JSON

namespace {

json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

json grid_json(const Grid& g) {
  json rows = json::array();
  for (const auto& row : g) rows.push_back(row);
  return rows;
}

json class_order() {
  json names = json::array();
  for (ActionClass a : kAllActions) names.push_back(std::string(to_string(a)));
  return names;
}

}  // namespace

json to_json(const MetricsReport& m) {
  json per = json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& cm = m.per_class[static_cast<std::size_t>(c)];
    per.push_back({{"class", std::string(to_string(static_cast<ActionClass>(c)))},
                   {"precision", cm.precision},
                   {"recall", cm.recall},
                   {"f1", cm.f1},
                   {"precision_undefined", cm.precision_undefined},
                   {"recall_undefined", cm.recall_undefined},
                   {"f1_undefined", cm.f1_undefined}});
  }
  json counts = json::array();
  for (const auto& row : m.confusion.counts) counts.push_back(row);
  return {{"per_class", per},
          {"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall},
          {"macro_f1", m.macro_f1},
          {"accuracy", m.accuracy},
          {"any_undefined", m.any_undefined},
          {"class_order", class_order()},
          {"confusion_counts", counts},
          {"confusion_pct", grid_json(m.confusion.percentages())}};
}

json to_json(const AggregateReport& a) {
  json per = json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassStats& s = a.per_class[static_cast<std::size_t>(c)];
    per.push_back({{"class", std::string(to_string(static_cast<ActionClass>(c)))},
                   {"precision", stat_json(s.precision)},
                   {"recall", stat_json(s.recall)},
                   {"f1", stat_json(s.f1)}});
  }
  return {{"folds", a.folds},
          {"per_class", per},
          {"macro_precision", stat_json(a.macro_precision)},
          {"macro_recall", stat_json(a.macro_recall)},
          {"macro_f1", stat_json(a.macro_f1)},
          {"accuracy", stat_json(a.accuracy)},
          {"std_kind", "population"},
          {"class_order", class_order()},
          {"mean_confusion_pct", grid_json(a.mean_confusion_pct)}};
}

json config_json(const StudyConfig& cfg) {
  const nn::ModelConfig& m = cfg.model;
  const nn::TrainConfig& t = cfg.train;
  return {{"model",
           {{"filters", m.filters},
            {"kernel", m.kernel},
            {"pool", m.pool},
            {"dense_units", m.dense_units},
            {"dropout", m.dropout},
            {"l1", m.l1},
            {"l2", m.l2},
            {"conv_relu", m.conv_relu}}},
          {"train",
           {{"batch_size", t.batch_size},
            {"max_epochs", t.max_epochs},
            {"patience", t.patience},
            {"monitor", "val_accuracy"},
            {"optimizer", std::string(nn::to_string(t.optimizer))},
            {"learning_rate", t.learning_rate}}},
          {"window", cfg.window},
          {"stride", cfg.stride},
          {"per_class", cfg.per_class},
          {"normalization", std::string(pipeline::to_string(cfg.norm))},
          {"folds", cfg.folds},
          {"val_fraction", cfg.val_fraction},
          {"seed", cfg.seed},
          {"scenarios", cfg.scenarios},
          {"nlos_scenario", cfg.nlos_scenario},
          {"protocol_note",
           "stratified k-fold per scenario; chosen over four repeated train/test runs per scenario"}};
}

json to_json(const StudyReport& r) {
  json groups = json::array();
  for (const GroupResult& g : r.groups) {
    json folds = json::array();
    for (const FoldResult& f : g.folds) {
      json fj = {{"fold", f.fold},
                 {"train_size", f.train_size},
                 {"val_size", f.val_size},
                 {"test_size", f.test_size},
                 {"epochs_run", f.history.epochs.size()},
                 {"best_epoch", f.history.best_epoch},
                 {"best_val_acc", f.history.best_val_acc},
                 {"metrics", to_json(f.metrics)}};
      if (f.held_out_scenario) fj["held_out_scenario"] = f.held_out_scenario;
      folds.push_back(fj);
    }
    groups.push_back({{"name", g.name},
                      {"scenario", g.scenario},
                      {"los", g.los},
                      {"aggregate", to_json(g.aggregate)},
                      {"folds", folds}});
  }
  return {{"study", std::string(to_string(r.study))}, {"config", r.config}, {"groups", groups}};
}

std::vector<std::string> check_invariants(const StudyReport& r) {
  std::vector<std::string> bad;
  auto in_range = [&](double v, const std::string& what) {
    if (!(v >= 0.0 && v <= 100.0)) bad.push_back(what + " = " + std::to_string(v) + " outside [0, 100]");
  };
  auto rows_ok = [&](const Grid& g, const std::string& what) {
    for (int t = 0; t < kNumClasses; ++t) {
      double sum = 0.0;
      for (double v : g[t]) sum += v;
      if (sum != 0.0 && std::abs(sum - 100.0) > 0.01) {
        bad.push_back(what + " row " + std::to_string(t) + " sums to " + std::to_string(sum));
      }
    }
  };
  for (const GroupResult& g : r.groups) {
    for (const FoldResult& f : g.folds) {
      const std::string where = g.name + " fold " + std::to_string(f.fold);
      const MetricsReport& m = f.metrics;
      in_range(m.accuracy, where + " accuracy");
      in_range(m.macro_precision, where + " macro precision");
      in_range(m.macro_recall, where + " macro recall");
      in_range(m.macro_f1, where + " macro F1");
      rows_ok(m.confusion.percentages(), where + " confusion");
      bool balanced = true;
      for (int c = 1; c < kNumClasses; ++c) balanced = balanced && m.confusion.row_total(c) == m.confusion.row_total(0);
      if (balanced && std::abs(m.accuracy - m.macro_recall) > 1e-9) {
        bad.push_back(where + ": balanced test set but accuracy " + std::to_string(m.accuracy) +
                      " != macro recall " + std::to_string(m.macro_recall));
      }
    }
    rows_ok(g.aggregate.mean_confusion_pct, g.name + " mean confusion");
  }
  return bad;
}

// ----------------------------------------------------------------- files

std::string confusion_text(const Grid& pct, std::string_view title) {
  std::ostringstream os;
  char buf[64];
  os << title << " (rows: true class, columns: predicted, %)\n";
  std::snprintf(buf, sizeof buf, "%-9s", "");
  os << buf;
  for (ActionClass a : kAllActions) {
    std::snprintf(buf, sizeof buf, "%9s", std::string(to_string(a)).c_str());
    os << buf;
  }
  os << '\n';
  for (int t = 0; t < kNumClasses; ++t) {
    std::snprintf(buf, sizeof buf, "%-9s", std::string(to_string(static_cast<ActionClass>(t))).c_str());
    os << buf;
    for (int p = 0; p < kNumClasses; ++p) {
      std::snprintf(buf, sizeof buf, "%9.2f", pct[t][p]);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& s, std::vector<std::string>& written) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + p.string());
  out << s;
  if (!out) fail(ErrorCode::Io, "short write to " + p.string());
  written.push_back(p.filename().string());
}

std::string pm(const Stat& s) { return fmt2(s.mean) + "," + fmt2(s.std); }

// metric,mean,std rows for precision, recall, F1 and accuracy.
std::string summary_csv(const AggregateReport& a) {
  std::string s = "metric,mean,std\n";
  s += "precision," + pm(a.macro_precision) + "\n";
  s += "recall," + pm(a.macro_recall) + "\n";
  s += "f1," + pm(a.macro_f1) + "\n";
  s += "accuracy," + pm(a.accuracy) + "\n";
  return s;
}

std::string per_class_csv(const AggregateReport& a) {
  std::string s = "class,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std\n";
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassStats& cs = a.per_class[static_cast<std::size_t>(c)];
    s += std::string(to_string(static_cast<ActionClass>(c))) + "," + pm(cs.precision) + "," + pm(cs.recall) + "," +
         pm(cs.f1) + "\n";
  }
  return s;
}

}  // namespace

std::vector<std::string> write_study_report(const StudyReport& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
  const fs::path base(dir);
  const std::string study(to_string(r.study));
  std::vector<std::string> written;

  write_text(base / (study + ".json"), to_json(r).dump(2) + "\n", written);

  switch (r.study) {
    case Study::PerScenarioCv: {
      std::string table = "scenario,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std,"
                          "accuracy_mean,accuracy_std\n";
      for (const GroupResult& g : r.groups) {
        const std::string stem = study + "_" + g.name;
        json one = to_json(r);
        one["groups"] = json::array();
        for (const auto& gj : to_json(r)["groups"]) {
          if (gj["name"] == g.name) one["groups"].push_back(gj);
        }
        write_text(base / (stem + ".json"), one.dump(2) + "\n", written);
        write_text(base / (stem + ".csv"), summary_csv(g.aggregate), written);
        write_text(base / (stem + "_confusion.txt"),
                   confusion_text(g.aggregate.mean_confusion_pct, "Scenario " + std::to_string(g.scenario)), written);
        const AggregateReport& a = g.aggregate;
        table += std::to_string(g.scenario) + "," + pm(a.macro_precision) + "," + pm(a.macro_recall) + "," +
                 pm(a.macro_f1) + "," + pm(a.accuracy) + "\n";
      }
      write_text(base / (study + "_table.csv"), table, written);
      break;
    }
    case Study::NlosComparison: {
      const AggregateReport& los = r.group("los").aggregate;
      const AggregateReport& nlos = r.group("nlos").aggregate;
      std::string paired = "metric,los_mean,los_std,nlos_mean,nlos_std\n";
      paired += "precision," + pm(los.macro_precision) + "," + pm(nlos.macro_precision) + "\n";
      paired += "recall," + pm(los.macro_recall) + "," + pm(nlos.macro_recall) + "\n";
      paired += "f1," + pm(los.macro_f1) + "," + pm(nlos.macro_f1) + "\n";
      paired += "accuracy," + pm(los.accuracy) + "," + pm(nlos.accuracy) + "\n";
      write_text(base / (study + "_paired.csv"), paired, written);
      // Per-class accuracy is the share of a class's test samples labeled correctly (its recall).
      std::string per = "class,los_mean,los_std,nlos_mean,nlos_std\n";
      for (int c = 0; c < kNumClasses; ++c) {
        per += std::string(to_string(static_cast<ActionClass>(c))) + "," +
               pm(los.per_class[static_cast<std::size_t>(c)].recall) + "," +
               pm(nlos.per_class[static_cast<std::size_t>(c)].recall) + "\n";
      }
      write_text(base / (study + "_per_class_accuracy.csv"), per, written);
      write_text(base / (study + "_los_confusion.txt"), confusion_text(los.mean_confusion_pct, "LOS"), written);
      write_text(base / (study + "_nlos_confusion.txt"), confusion_text(nlos.mean_confusion_pct, "NLOS"), written);
      break;
    }
    case Study::Loso: {
      const GroupResult& g = r.group("loso");
      write_text(base / (study + "_table.csv"), per_class_csv(g.aggregate), written);
      std::string folds = "held_out_scenario,accuracy,macro_precision,macro_recall,macro_f1\n";
      for (const FoldResult& f : g.folds) {
        folds += std::to_string(f.held_out_scenario) + "," + fmt2(f.metrics.accuracy) + "," +
                 fmt2(f.metrics.macro_precision) + "," + fmt2(f.metrics.macro_recall) + "," +
                 fmt2(f.metrics.macro_f1) + "\n";
      }
      write_text(base / (study + "_folds.csv"), folds, written);
      write_text(base / (study + "_confusion.txt"),
                 confusion_text(g.aggregate.mean_confusion_pct, "Leave-one-scenario-out"), written);
      break;
    }
  }
  return written;
}

}  // namespace csiarm::eval
