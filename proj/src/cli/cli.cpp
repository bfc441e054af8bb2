// SPDX-License-Identifier: Apache-2.0
#include "csiarm/cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "csiarm/csi/csir_format.hpp"
#include "csiarm/csi/ingest.hpp"
#include "csiarm/error.hpp"
#include "csiarm/nn/checkpoint.hpp"
#include "csiarm/parallel.hpp"

namespace csiarm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------ config JSON

json to_json(const RunConfig& c) {
  json actions = json::array();
  for (ActionClass a : c.plan.actions) actions.push_back(std::string(to_string(a)));
  json optimizers = json::array();
  for (nn::OptimizerKind k : c.grid.optimizers) optimizers.push_back(std::string(nn::to_string(k)));
  const json per_class = c.per_class ? json(*c.per_class) : json(nullptr);
  const json plan_noise = c.plan.noise_std ? json(*c.plan.noise_std) : json("default");
  return {
      {"seed", c.seed},
      {"threads", c.threads},
      {"scene", {{"obstacle_attenuation_db", c.obstacle_attenuation_db}, {"scenario_step_m", c.scenario_step_m}}},
      {"plan",
       {{"scenarios", c.plan.scenarios},
        {"actions", actions},
        {"los", c.plan.los},
        {"nlos_scenarios", c.plan.nlos_scenarios},
        {"packets", c.plan.packets},
        {"rate", c.plan.rate_hz},
        {"seed", c.plan.seed},
        {"noise_std", plan_noise},
        {"recordings_per_cell", c.plan.recordings_per_cell}}},
      {"pipeline",
       {{"window", c.window}, {"stride", c.stride}, {"per_class", per_class}, {"norm", pipeline::to_string(c.norm)}}},
      {"model",
       {{"filters", c.model.filters},
        {"kernel", c.model.kernel},
        {"pool", c.model.pool},
        {"dense_units", c.model.dense_units},
        {"dropout", c.model.dropout},
        {"classes", c.model.classes},
        {"l1", c.model.l1},
        {"l2", c.model.l2},
        {"conv_relu", c.model.conv_relu}}},
      {"train",
       {{"batch_size", c.train.batch_size},
        {"max_epochs", c.train.max_epochs},
        {"patience", c.train.patience},
        {"optimizer", nn::to_string(c.train.optimizer)},
        {"learning_rate", c.train.learning_rate},
        {"beta1", c.train.hyper.beta1},
        {"beta2", c.train.hyper.beta2},
        {"eps", c.train.hyper.eps},
        {"rho", c.train.hyper.rho},
        {"test_fraction", c.test_fraction},
        {"val_fraction", c.val_fraction}}},
      {"eval", {{"folds", c.folds}, {"scenarios", c.scenarios}, {"nlos_scenario", c.nlos_scenario}}},
      {"grid", {{"optimizers", optimizers}, {"learning_rates", c.grid.learning_rates}}},
  };
}

namespace {

using Setter = std::function<void(const json&)>;

void apply_section(const json& obj, const std::string& section, const std::map<std::string, Setter>& setters) {
  if (!obj.is_object()) fail(ErrorCode::InvalidArgument, "config: '" + section + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    const std::string where = section.empty() ? key : section + "." + key;
    const auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorCode::InvalidArgument, "config: unknown key '" + where + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      fail(ErrorCode::InvalidArgument, "config: bad value for '" + where + "': " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::InvalidArgument, "config: bad value for '" + where + "': " + e.detail());
    }
  }
}

template <typename T>
Setter set(T& dst) {
  return [&dst](const json& v) { dst = v.get<T>(); };
}

ActionClass action_or_throw(const std::string& name) {
  const auto a = parse_action(name);
  if (!a) fail(ErrorCode::InvalidArgument, "unknown action '" + name + "'");
  return *a;
}

pipeline::NormMode norm_or_throw(const std::string& name) {
  const auto m = pipeline::parse_norm_mode(name);
  if (!m) fail(ErrorCode::InvalidArgument, "unknown normalization '" + name + "'");
  return *m;
}

}  // namespace

RunConfig apply_json(RunConfig c, const json& j) {
  std::map<std::string, Setter> top{
      {"seed", set(c.seed)},
      {"threads", set(c.threads)},
      {"scene",
       [&](const json& s) {
         apply_section(s, "scene", {{"obstacle_attenuation_db", set(c.obstacle_attenuation_db)},
                                    {"scenario_step_m", set(c.scenario_step_m)}});
       }},
      {"plan",
       [&](const json& s) {
         apply_section(s, "plan",
                       {{"scenarios", set(c.plan.scenarios)},
                        {"actions",
                         [&](const json& v) {
                           c.plan.actions.clear();
                           for (const auto& n : v) c.plan.actions.push_back(action_or_throw(n.get<std::string>()));
                         }},
                        {"los", set(c.plan.los)},
                        {"nlos_scenarios", set(c.plan.nlos_scenarios)},
                        {"packets", set(c.plan.packets)},
                        {"rate", set(c.plan.rate_hz)},
                        {"seed", set(c.plan.seed)},
                        {"noise_std",
                         [&](const json& v) {
                           if (v.is_string() && v.get<std::string>() == "default") {
                             c.plan.noise_std.reset();
                           } else {
                             c.plan.noise_std = v.get<double>();
                           }
                         }},
                        {"recordings_per_cell", set(c.plan.recordings_per_cell)}});
       }},
      {"pipeline",
       [&](const json& s) {
         apply_section(s, "pipeline",
                       {{"window", set(c.window)},
                        {"stride", set(c.stride)},
                        {"per_class",
                         [&](const json& v) {
                           if (v.is_null()) {
                             c.per_class.reset();
                           } else {
                             c.per_class = v.get<std::size_t>();
                           }
                         }},
                        {"norm", [&](const json& v) { c.norm = norm_or_throw(v.get<std::string>()); }}});
       }},
      {"model",
       [&](const json& s) {
         apply_section(s, "model",
                       {{"filters", set(c.model.filters)},
                        {"kernel", set(c.model.kernel)},
                        {"pool", set(c.model.pool)},
                        {"dense_units", set(c.model.dense_units)},
                        {"dropout", set(c.model.dropout)},
                        {"classes", set(c.model.classes)},
                        {"l1", set(c.model.l1)},
                        {"l2", set(c.model.l2)},
                        {"conv_relu", set(c.model.conv_relu)}});
       }},
      {"train",
       [&](const json& s) {
         apply_section(s, "train",
                       {{"batch_size", set(c.train.batch_size)},
                        {"max_epochs", set(c.train.max_epochs)},
                        {"patience", set(c.train.patience)},
                        {"optimizer", [&](const json& v) { c.train.optimizer = nn::parse_optimizer(v.get<std::string>()); }},
                        {"learning_rate", set(c.train.learning_rate)},
                        {"beta1", set(c.train.hyper.beta1)},
                        {"beta2", set(c.train.hyper.beta2)},
                        {"eps", set(c.train.hyper.eps)},
                        {"rho", set(c.train.hyper.rho)},
                        {"test_fraction", set(c.test_fraction)},
                        {"val_fraction", set(c.val_fraction)}});
       }},
      {"eval",
       [&](const json& s) {
         apply_section(s, "eval",
                       {{"folds", set(c.folds)}, {"scenarios", set(c.scenarios)}, {"nlos_scenario", set(c.nlos_scenario)}});
       }},
      {"grid",
       [&](const json& s) {
         apply_section(s, "grid",
                       {{"optimizers",
                         [&](const json& v) {
                           c.grid.optimizers.clear();
                           for (const auto& n : v) c.grid.optimizers.push_back(nn::parse_optimizer(n.get<std::string>()));
                         }},
                        {"learning_rates", set(c.grid.learning_rates)}});
       }},
  };
  apply_section(j, "", top);
  return c;
}

synth::SceneConfig scene_of(const RunConfig& c) {
  synth::SceneConfig s = synth::default_scene();
  s.obstacle_attenuation_db = c.obstacle_attenuation_db;
  s.scenario_step_m = c.scenario_step_m;
  return s;
}

eval::StudyConfig study_of(const RunConfig& c) {
  eval::StudyConfig s;
  s.model = c.model;
  s.train = c.train;
  s.window = c.window;
  s.stride = c.stride;
  s.per_class = c.per_class.value_or(0);
  s.norm = c.norm;
  s.folds = c.folds;
  s.val_fraction = c.val_fraction;
  s.seed = c.seed;
  s.scenarios = c.scenarios;
  s.nlos_scenario = c.nlos_scenario;
  s.threads = c.threads;
  return s;
}

// ------------------------------------------------------------------ inputs

std::vector<CsiRecording> load_recordings(const std::vector<std::string>& paths, std::vector<std::string>* names) {
  std::vector<std::string> files;
  for (const std::string& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".csir") found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      fail(ErrorCode::Io, "no such file or directory: " + p);
    }
  }
  if (files.empty()) fail(ErrorCode::Io, "no .csir recordings found in the inputs");
  std::vector<CsiRecording> recs;
  recs.reserve(files.size());
  for (const std::string& f : files) {
    try {
      recs.push_back(csir::read_file(f));
    } catch (const Error& e) {
      throw Error(e.code(), f + ": " + e.detail());
    }
  }
  if (names) *names = files;
  return recs;
}

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::trunc | std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + p.string());
  out << s;
  if (!out) fail(ErrorCode::Io, "short write to " + p.string());
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
}

void stamp_dir(const std::string& dir, const RunConfig& c, const std::string& command) {
  json j = to_json(c);
  j["command"] = command;
  write_text(fs::path(dir) / "run_config.json", j.dump(2) + "\n");
}

void stamp_file(const std::string& file, const RunConfig& c, const std::string& command) {
  json j = to_json(c);
  j["command"] = command;
  write_text(file + ".config.json", j.dump(2) + "\n");
}

std::uint64_t fnv1a64(std::span<const std::byte> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool is_dataset_file(const std::vector<std::string>& inputs) {
  return inputs.size() == 1 && fs::path(inputs[0]).extension() == ".csds";
}

/// Dataset from a .csds container or assembled from CSIR recordings.
pipeline::LabeledDataset load_dataset(const std::vector<std::string>& inputs, const RunConfig& c) {
  if (is_dataset_file(inputs)) return pipeline::read_dataset(inputs[0]);
  std::vector<std::string> names;
  const std::vector<CsiRecording> recs = load_recordings(inputs, &names);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].packets() < c.window) {
      fail(ErrorCode::WindowTooLarge, names[i] + ": " + std::to_string(recs[i].packets()) +
                                          " packets, window is " + std::to_string(c.window));
    }
  }
  pipeline::AssembleOptions opt;
  opt.window = c.window;
  opt.stride = c.stride;
  opt.per_class_cap = c.per_class;
  return pipeline::assemble(recs, opt);
}

std::string counts_line(const pipeline::LabeledDataset& ds) {
  const auto counts = ds.class_counts();
  std::string s;
  for (int k = 0; k < kNumClasses; ++k) {
    if (k) s += ", ";
    s += std::string(to_string(static_cast<ActionClass>(k))) + " " + std::to_string(counts[static_cast<std::size_t>(k)]);
  }
  return s;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// ---------------------------------------------------------------- commands

struct Context {
  RunConfig cfg;
  std::string out;
  std::ostream& o;
  std::ostream& e;
  std::function<void(const std::string&)> log() const {
    std::ostream* err = &e;
    return [err](const std::string& m) { *err << m << '\n' << std::flush; };
  }
};

int cmd_synth(Context& ctx, const std::optional<std::string>& plan_file, bool seed_flag) {
  RunConfig& c = ctx.cfg;
  if (plan_file) {
    std::ifstream in(*plan_file, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot read plan " + *plan_file);
    std::stringstream ss;
    ss << in.rdbuf();
    c.plan = synth::parse_corpus_plan(ss.str());
    if (seed_flag) c.plan.seed = c.seed;
  } else {
    c.plan.seed = c.seed;
  }
  make_dir(ctx.out);
  const synth::SceneConfig scene = scene_of(c);
  synth::validate(scene);
  const std::vector<synth::CorpusCell> cells = synth::plan_cells(c.plan);
  std::vector<json> entries(cells.size());
  parallel_for(cells.size(), c.threads, [&](std::size_t i) {
    const synth::CorpusCell& cell = cells[i];
    const CsiRecording rec = synth::generate_cell(scene, c.plan, cell);
    const std::vector<std::byte> bytes = csir::encode(rec);
    const std::string name = synth::recording_file_name(cell);
    std::ofstream out(fs::path(ctx.out) / name, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "cannot write " + name);
    entries[i] = {{"file", name},
                  {"scenario", cell.scenario},
                  {"action", std::string(to_string(cell.action))},
                  {"los", cell.los},
                  {"index", cell.index},
                  {"packets", rec.packets()},
                  {"bytes", bytes.size()},
                  {"fnv1a64", hex64(fnv1a64(bytes))}};
  });
  json manifest = {{"plan", synth::format_corpus_plan(c.plan)}, {"files", entries}};
  write_text(fs::path(ctx.out) / "manifest.json", manifest.dump(2) + "\n");
  stamp_dir(ctx.out, c, "synth");
  ctx.o << "wrote " << cells.size() << " recordings and manifest.json to " << ctx.out << '\n';
  return kOk;
}

struct IngestArgs {
  std::uint16_t port = kDefaultIngestPort;
  std::optional<std::size_t> count;
  std::optional<double> duration_s;
  std::optional<std::string> label;
  int scenario = 1;
  bool nlos = false;
  double rate = 30.0;
  double scale = 1.0;
};

int cmd_ingest(Context& ctx, const IngestArgs& a) {
  CsiRecording rec;
  if (a.label) rec.label = action_or_throw(*a.label);
  if (a.scenario < 1 || a.scenario > 4) fail(ErrorCode::InvalidArgument, "scenario must be 1-4");
  rec.scenario_id = static_cast<std::uint8_t>(a.scenario);
  rec.los = !a.nlos;
  rec.sample_rate_hz = static_cast<float>(a.rate);

  StopCondition stop;
  stop.max_frames = a.count;
  if (a.duration_s) {
    if (*a.duration_s < 0.0) fail(ErrorCode::InvalidArgument, "duration must be >= 0");
    stop.duration = std::chrono::milliseconds(static_cast<long long>(*a.duration_s * 1000.0));
  }
  g_interrupted.store(false);
  stop.stop_flag = &g_interrupted;
  auto previous = std::signal(SIGINT, on_sigint);
  DatagramLayout layout = DatagramLayout::standard();
  layout.scale = a.scale;
  IngestResult res;
  try {
    res = ingest_stream(a.port, stop, layout);
  } catch (...) {
    std::signal(SIGINT, previous);
    throw;
  }
  std::signal(SIGINT, previous);

  if (res.frames.empty()) fail(ErrorCode::InvalidRecording, "no frames received; a recording needs at least one");
  rec.frames = std::move(res.frames);
  validate(rec);
  const fs::path parent = fs::path(ctx.out).parent_path();
  if (!parent.empty()) make_dir(parent.string());
  csir::write_file(ctx.out, rec);
  stamp_file(ctx.out, ctx.cfg, "ingest");
  ctx.o << "wrote " << rec.packets() << " frames to " << ctx.out;
  if (res.dropped) ctx.o << " (" << res.dropped << " datagrams dropped)";
  ctx.o << '\n';
  return kOk;
}

int cmd_preprocess(Context& ctx, const std::vector<std::string>& inputs, bool normalize,
                   const std::optional<std::string>& csv) {
  pipeline::LabeledDataset ds = load_dataset(inputs, ctx.cfg);
  pipeline::NormStats stats;
  if (normalize) {
    auto n = pipeline::normalize(ds, ctx.cfg.norm);
    ds = std::move(n.dataset);
    stats = n.stats;
  }
  const fs::path parent = fs::path(ctx.out).parent_path();
  if (!parent.empty()) make_dir(parent.string());
  pipeline::write_dataset(ctx.out, ds);
  if (csv) pipeline::export_dataset_csv(*csv, ds);
  json stamp = to_json(ctx.cfg);
  stamp["command"] = "preprocess";
  stamp["normalized"] = normalize;
  if (normalize) stamp["norm_stats"] = {{"mode", pipeline::to_string(stats.mode)}, {"min", stats.min}, {"max", stats.max}};
  write_text(ctx.out + ".config.json", stamp.dump(2) + "\n");
  ctx.o << "wrote " << ds.size() << " samples of " << ds.window << "x" << ds.width << " (" << counts_line(ds) << ") to "
        << ctx.out << '\n';
  return kOk;
}

int cmd_train(Context& ctx, const std::vector<std::string>& inputs) {
  const RunConfig& c = ctx.cfg;
  const pipeline::LabeledDataset ds = load_dataset(inputs, c);
  ctx.e << "dataset: " << ds.size() << " samples (" << counts_line(ds) << ")\n";
  const auto [train_idx, test_idx] = nn::stratified_holdout(ds, c.test_fraction, derive_seed(c.seed, 0x54455354));
  const pipeline::LabeledDataset train_part = ds.subset(train_idx);
  const pipeline::LabeledDataset test = ds.subset(test_idx);

  eval::StudyConfig sc = study_of(c);
  auto log = ctx.log();
  sc.train.on_epoch_end = [log](const nn::EpochRecord& r) {
    log("epoch " + std::to_string(r.epoch) + ": loss " + pct(r.train_loss) + ", val acc " + pct(100.0 * r.val_acc) +
        "%");
  };
  std::optional<nn::Checkpoint> keep;
  const eval::FoldResult fold = eval::train_and_score(train_part, test, sc, derive_seed(c.seed, 0x5452), &keep);

  make_dir(ctx.out);
  const fs::path dir(ctx.out);
  nn::save_checkpoint((dir / "model.csnn").string(), keep->model, keep->norm);
  nn::write_history_csv((dir / "history.csv").string(), fold.history);
  json metrics = {{"train_size", fold.train_size},
                  {"val_size", fold.val_size},
                  {"test_size", fold.test_size},
                  {"epochs_run", fold.history.epochs.size()},
                  {"best_epoch", fold.history.best_epoch},
                  {"best_val_acc", fold.history.best_val_acc},
                  {"stopped_early", fold.history.stopped_early},
                  {"test", eval::to_json(fold.metrics)}};
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_text(dir / "confusion.txt", eval::confusion_text(fold.metrics.confusion.percentages(), "Held-out test"));
  stamp_dir(ctx.out, c, "train");
  ctx.o << "test accuracy " << pct(fold.metrics.accuracy) << "% after " << fold.history.epochs.size()
        << " epochs (best epoch " << fold.history.best_epoch << "); model written to " << (dir / "model.csnn").string()
        << '\n';
  return kOk;
}

int cmd_gridsearch(Context& ctx, const std::vector<std::string>& inputs) {
  const RunConfig& c = ctx.cfg;
  const pipeline::LabeledDataset ds = load_dataset(inputs, c);
  const auto [fit_idx, val_idx] = nn::stratified_holdout(ds, c.val_fraction, derive_seed(c.seed, 0x4752));
  auto normalized = pipeline::normalize(ds.subset(fit_idx), c.norm);
  pipeline::LabeledDataset val = ds.subset(val_idx);
  pipeline::apply_normalization(val, normalized.stats);

  nn::ModelConfig mc = c.model;
  mc.input_h = static_cast<int>(ds.window);
  mc.input_w = static_cast<int>(ds.width);
  nn::TrainConfig base = c.train;
  base.seed = derive_seed(c.seed, 0x5452);
  ctx.e << "grid: " << c.grid.optimizers.size() << " optimizers x " << c.grid.learning_rates.size()
        << " learning rates on " << normalized.dataset.size() << " training samples\n";
  const nn::GridReport report =
      nn::grid_search(mc, derive_seed(c.seed, 1), normalized.dataset, val, base, c.grid, c.threads);

  make_dir(ctx.out);
  const fs::path dir(ctx.out);
  write_text(dir / "grid.csv", nn::grid_csv(report));
  write_text(dir / "grid.txt", nn::grid_table(report));
  stamp_dir(ctx.out, c, "gridsearch");
  const auto best = std::max_element(report.cells.begin(), report.cells.end(), [](const auto& a, const auto& b) {
    return (a.ok ? a.val_acc : -1.0) < (b.ok ? b.val_acc : -1.0);
  });
  const auto failed = std::count_if(report.cells.begin(), report.cells.end(), [](const auto& x) { return !x.ok; });
  ctx.o << nn::grid_table(report);
  if (best != report.cells.end() && best->ok) {
    ctx.o << "best: " << nn::to_string(best->optimizer) << " lr " << best->learning_rate << " val acc "
          << pct(100.0 * best->val_acc) << "%";
  }
  ctx.o << " (" << report.cells.size() << " cells, " << failed << " failed)\n";
  return kOk;
}

int cmd_evaluate_study(Context& ctx, eval::Study study, const std::vector<std::string>& inputs) {
  const RunConfig& c = ctx.cfg;
  const std::vector<CsiRecording> corpus = load_recordings(inputs);
  eval::StudyConfig sc = study_of(c);
  sc.log = ctx.log();
  const eval::StudyReport report = eval::run_case_study(study, corpus, sc);
  make_dir(ctx.out);
  const auto files = eval::write_study_report(report, ctx.out);
  stamp_dir(ctx.out, c, "evaluate");
  for (const eval::GroupResult& g : report.groups) {
    ctx.o << g.name << ": accuracy " << pct(g.aggregate.accuracy.mean) << " +- " << pct(g.aggregate.accuracy.std)
          << "%\n";
  }
  ctx.o << "wrote " << files.size() + 1 << " files to " << ctx.out << '\n';
  const auto violations = eval::check_invariants(report);
  for (const std::string& v : violations) ctx.e << "invariant violated: " << v << '\n';
  return violations.empty() ? kOk : kInvariantViolation;
}

int cmd_evaluate_checkpoint(Context& ctx, const std::string& checkpoint, const std::vector<std::string>& inputs) {
  nn::Checkpoint ck = nn::load_checkpoint(checkpoint);
  RunConfig& c = ctx.cfg;
  c.window = static_cast<std::size_t>(ck.model.config().input_h);
  pipeline::LabeledDataset ds = load_dataset(inputs, c);
  if (ds.width != static_cast<std::size_t>(ck.model.config().input_w)) {
    fail(ErrorCode::ShapeMismatch, "model expects width " + std::to_string(ck.model.config().input_w) + ", data has " +
                                       std::to_string(ds.width));
  }
  pipeline::apply_normalization(ds, ck.norm);
  const std::vector<int> preds = nn::predict(ck.model, ds);
  std::vector<int> truths;
  for (const auto& info : ds.info) truths.push_back(code(info.label));
  const eval::MetricsReport m = eval::compute_metrics(preds, truths);
  make_dir(ctx.out);
  const fs::path dir(ctx.out);
  write_text(dir / "metrics.json", json{{"checkpoint", checkpoint}, {"metrics", eval::to_json(m)}}.dump(2) + "\n");
  write_text(dir / "confusion.txt", eval::confusion_text(m.confusion.percentages(), "Checkpoint"));
  stamp_dir(ctx.out, c, "evaluate");
  ctx.o << "accuracy " << pct(m.accuracy) << "% on " << ds.size() << " samples\n";
  return kOk;
}

std::string stat_text(const json& s) { return pct(s.at("mean").get<double>()) + " +- " + pct(s.at("std").get<double>()); }

int cmd_report(Context& ctx, const std::string& input) {
  std::ifstream in(input, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + input);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, input + ": not JSON: " + e.what());
  }
  std::ostringstream os;
  try {
    os << "study: " << j.at("study").get<std::string>() << '\n';
    for (const json& g : j.at("groups")) {
      const json& a = g.at("aggregate");
      os << '\n' << g.at("name").get<std::string>() << " (" << a.at("folds").get<int>() << " folds)\n";
      os << "  accuracy  " << stat_text(a.at("accuracy")) << '\n';
      os << "  precision " << stat_text(a.at("macro_precision")) << '\n';
      os << "  recall    " << stat_text(a.at("macro_recall")) << '\n';
      os << "  f1        " << stat_text(a.at("macro_f1")) << '\n';
      os << "  class      precision          recall             f1\n";
      for (const json& pc : a.at("per_class")) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "  %-9s  %-17s  %-17s  %s\n", pc.at("class").get<std::string>().c_str(),
                      stat_text(pc.at("precision")).c_str(), stat_text(pc.at("recall")).c_str(),
                      stat_text(pc.at("f1")).c_str());
        os << buf;
      }
      eval::Grid grid{};
      const json& m = a.at("mean_confusion_pct");
      for (int t = 0; t < kNumClasses; ++t) {
        for (int p = 0; p < kNumClasses; ++p) grid[t][p] = m.at(t).at(p).get<double>();
      }
      os << eval::confusion_text(grid, "  mean confusion");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, input + ": not a study report: " + e.what());
  }
  if (!ctx.out.empty()) {
    make_dir(ctx.out);
    write_text(fs::path(ctx.out) / "report.txt", os.str());
  }
  ctx.o << os.str();
  return kOk;
}

}  // namespace

// ---------------------------------------------------------------- dispatch

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"WiFi-CSI robotic-arm motion classifier", "csiarm"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_path;
  app.add_option("--config", config_file, "JSON config file; flags override it")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--threads", threads, "Worker thread cap")->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "Output file or directory");

  // Shared pipeline / training overrides.
  std::optional<std::size_t> window, stride, per_class;
  std::optional<std::string> norm, optimizer;
  std::optional<double> lr, test_fraction, val_fraction;
  std::optional<int> epochs, patience, batch, folds;
  std::vector<std::string> inputs;
  auto add_pipeline = [&](CLI::App* sub) {
    sub->add_option("--in", inputs, "CSIR files or directories, or one .csds dataset")->required();
    sub->add_option("--window", window, "Packets per sample");
    sub->add_option("--stride", stride, "Packets between window starts");
    sub->add_option("--per-class", per_class, "Samples kept per class (0: balance to the smallest class)");
    sub->add_option("--norm", norm, "none | per-sample-standardize | global-minmax");
  };
  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--optimizer", optimizer, "sgd | rmsprop | adam | adagrad | nadam | adamax");
    sub->add_option("--lr", lr, "Learning rate");
    sub->add_option("--epochs", epochs, "Maximum epochs");
    sub->add_option("--patience", patience, "Early-stopping patience in epochs");
    sub->add_option("--batch", batch, "Batch size");
    sub->add_option("--val-fraction", val_fraction, "Share of the training part held out for early stopping");
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic CSIR corpus");
  std::optional<std::string> plan_file;
  std::optional<double> noise_std;
  std::optional<double> attenuation;
  synth->add_option("--plan", plan_file, "Corpus plan (key=value lines)")->check(CLI::ExistingFile);
  synth->add_option("--noise-std", noise_std, "Complex noise std per subcarrier (linear amplitude)");
  synth->add_option("--attenuation-db", attenuation, "Obstacle attenuation per crossing path leg");

  CLI::App* ingest = app.add_subcommand("ingest", "Record CSI datagrams from UDP into a CSIR file");
  IngestArgs ia;
  ingest->add_option("--port", ia.port, "UDP port");
  ingest->add_option("--count", ia.count, "Stop after this many frames");
  ingest->add_option("--duration", ia.duration_s, "Stop after this many seconds");
  ingest->add_option("--label", ia.label, "arc | elbow | circle | silence (omit for unlabeled)");
  ingest->add_option("--scenario", ia.scenario, "Scenario id stored in the file");
  ingest->add_flag("--nlos", ia.nlos, "Mark the recording as non-line-of-sight");
  ingest->add_option("--rate", ia.rate, "Nominal packet rate stored in the file");
  ingest->add_option("--scale", ia.scale, "Scale applied to raw int16 I/Q");

  CLI::App* preprocess = app.add_subcommand("preprocess", "Filter, window and balance recordings into a dataset");
  add_pipeline(preprocess);
  bool do_normalize = false;
  std::optional<std::string> csv;
  preprocess->add_flag("--normalize", do_normalize, "Apply --norm before writing");
  preprocess->add_option("--csv", csv, "Also export the dataset as CSV");

  CLI::App* train = app.add_subcommand("train", "Train the classifier and score a held-out split");
  add_pipeline(train);
  add_training(train);
  train->add_option("--test-fraction", test_fraction, "Share held out for the final score");

  CLI::App* grid = app.add_subcommand("gridsearch", "Sweep optimizers and learning rates");
  add_pipeline(grid);
  add_training(grid);
  std::vector<std::string> grid_opts;
  std::vector<double> grid_lrs;
  grid->add_option("--optimizers", grid_opts, "Optimizers to sweep")->delimiter(',');
  grid->add_option("--lrs", grid_lrs, "Learning rates to sweep")->delimiter(',');

  CLI::App* evaluate = app.add_subcommand("evaluate", "Run a case study or score a checkpoint");
  add_pipeline(evaluate);
  add_training(evaluate);
  std::optional<std::string> study_name, checkpoint;
  evaluate->add_option("--study", study_name, "per-scenario-cv | nlos-comparison | loso");
  evaluate->add_option("--checkpoint", checkpoint, "Score this model on the inputs instead")->check(CLI::ExistingFile);
  evaluate->add_option("--folds", folds, "Cross-validation folds");

  CLI::App* report = app.add_subcommand("report", "Print the tables of a study report JSON");
  std::string report_in;
  report->add_option("--in", report_in, "Study JSON written by evaluate")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  Context ctx{RunConfig{}, out_path, out, err};
  try {
    RunConfig& c = ctx.cfg;
    if (config_file) {
      std::ifstream in(*config_file, std::ios::binary);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        err << "error: " << *config_file << " is not valid JSON: " << e.what() << '\n';
        return kUsage;
      }
      try {
        c = apply_json(c, j);
      } catch (const Error& e) {
        err << "error: " << *config_file << ": " << e.what() << '\n';
        return kUsage;
      }
    }
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (window) c.window = *window;
    if (stride) c.stride = *stride;
    if (per_class) c.per_class = *per_class == 0 ? std::nullopt : std::optional<std::size_t>(*per_class);
    if (norm) c.norm = norm_or_throw(*norm);
    if (optimizer) c.train.optimizer = nn::parse_optimizer(*optimizer);
    if (lr) c.train.learning_rate = *lr;
    if (epochs) c.train.max_epochs = *epochs;
    if (patience) c.train.patience = *patience;
    if (batch) c.train.batch_size = *batch;
    if (val_fraction) c.val_fraction = *val_fraction;
    if (test_fraction) c.test_fraction = *test_fraction;
    if (folds) c.folds = *folds;
    if (noise_std) c.plan.noise_std = *noise_std;
    if (attenuation) c.obstacle_attenuation_db = *attenuation;
    if (!grid_opts.empty()) {
      c.grid.optimizers.clear();
      for (const std::string& n : grid_opts) c.grid.optimizers.push_back(nn::parse_optimizer(n));
    }
    if (!grid_lrs.empty()) c.grid.learning_rates = grid_lrs;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  auto need_out = [&](const char* what) {
    if (ctx.out.empty()) {
      err << "error: --out " << what << " is required\n";
      return false;
    }
    return true;
  };

  try {
    if (*synth) return need_out("DIR") ? cmd_synth(ctx, plan_file, seed.has_value()) : kUsage;
    if (*ingest) {
      if (ia.count && *ia.count == 0) fail(ErrorCode::InvalidRecording, "--count 0 would record nothing");
      return need_out("FILE") ? cmd_ingest(ctx, ia) : kUsage;
    }
    if (*preprocess) return need_out("FILE") ? cmd_preprocess(ctx, inputs, do_normalize, csv) : kUsage;
    if (*train) return need_out("DIR") ? cmd_train(ctx, inputs) : kUsage;
    if (*grid) return need_out("DIR") ? cmd_gridsearch(ctx, inputs) : kUsage;
    if (*evaluate) {
      if (!need_out("DIR")) return kUsage;
      if (checkpoint && study_name) {
        err << "error: give either --study or --checkpoint, not both\n";
        return kUsage;
      }
      if (checkpoint) return cmd_evaluate_checkpoint(ctx, *checkpoint, inputs);
      if (!study_name) {
        err << "error: evaluate needs --study or --checkpoint\n";
        return kUsage;
      }
      const auto study = eval::parse_study(*study_name);
      if (!study) {
        err << "error: unknown study '" << *study_name << "'\n";
        return kUsage;
      }
      return cmd_evaluate_study(ctx, *study, inputs);
    }
    if (*report) return cmd_report(ctx, report_in);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::NonFinite ? kInvariantViolation : kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace csiarm::cli
