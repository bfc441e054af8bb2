// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <thread>

#include "json.hpp"

#include "csiarm/cli/cli.hpp"
#include "csiarm/csi/csir_format.hpp"
#include "csiarm/csi/datagram.hpp"
#include "csiarm/csi/ingest.hpp"
#include "csiarm/nn/checkpoint.hpp"
#include "support/random_data.hpp"

using namespace csiarm;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Small model and pipeline so train/evaluate finish in a second or two.
fs::path tiny_config(const fs::path& dir) {
  const nlohmann::json j = {
      {"pipeline", {{"window", 18}, {"stride", 18}, {"per_class", 6}}},
      {"model", {{"filters", {2, 2, 2}}, {"dense_units", 4}}},
      {"train", {{"max_epochs", 2}, {"patience", 1}, {"val_fraction", 0.25}, {"test_fraction", 0.25}}},
      {"eval", {{"folds", 2}}},
  };
  const fs::path p = dir / "tiny.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

fs::path tiny_corpus(const fs::path& dir) {
  std::ofstream(dir / "plan.txt") << "packets = 108\nnlos_scenarios = 2\n";
  const fs::path corpus = dir / "corpus";
  EXPECT_EQ(invoke({"synth", "--plan", (dir / "plan.txt").string(), "--out", corpus.string()}).code, 0);
  return corpus;
}

}  // namespace

TEST(Cli, ConfigRoundTripAndUnknownKeys) {
  cli::RunConfig c;
  c.seed = 77;
  c.window = 123;
  c.model.filters = {3, 4, 5};
  c.train.optimizer = nn::OptimizerKind::Nadam;
  c.grid.learning_rates = {0.5};
  const cli::RunConfig back = cli::apply_json(cli::RunConfig{}, cli::to_json(c));
  EXPECT_EQ(cli::to_json(back).dump(), cli::to_json(c).dump());
  EXPECT_THROW(cli::apply_json(cli::RunConfig{}, nlohmann::json{{"sed", 1}}), Error);
  EXPECT_THROW(cli::apply_json(cli::RunConfig{}, nlohmann::json{{"model", {{"filters", "many"}}}}), Error);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(invoke({}).code, cli::kUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"preprocess"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"--help"}).code, cli::kOk);
}

TEST(Cli, SynthIsDeterministicAndWritesManifest) {
  const fs::path d = fresh_dir("synth");
  const fs::path a = tiny_corpus(d);
  const fs::path b = d / "again";
  ASSERT_EQ(invoke({"synth", "--plan", (d / "plan.txt").string(), "--out", b.string(), "--threads", "2"}).code, 0);
  int n = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csir") continue;
    ++n;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
  }
  EXPECT_EQ(n, 20);
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest["files"].size(), 20u);
  EXPECT_TRUE(fs::exists(a / "run_config.json"));

  const fs::path c = d / "other_seed";
  ASSERT_EQ(invoke({"synth", "--plan", (d / "plan.txt").string(), "--seed", "5", "--out", c.string()}).code, 0);
  EXPECT_NE(slurp(a / "arc_1_los_0.csir"), slurp(c / "arc_1_los_0.csir"));
}

TEST(Cli, PreprocessWindowTooLargeNamesTheFile) {
  const fs::path d = fresh_dir("pre");
  const fs::path corpus = tiny_corpus(d);
  const CliRun r = invoke({"preprocess", "--in", corpus.string(), "--window", "300", "--out", (d / "x.csds").string()});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("WindowTooLarge"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find(".csir"), std::string::npos) << r.err;

  const CliRun ok = invoke({"preprocess", "--in", corpus.string(), "--window", "18", "--stride", "18", "--per-class", "5",
                      "--out", (d / "ds.csds").string(), "--csv", (d / "ds.csv").string()});
  ASSERT_EQ(ok.code, 0) << ok.err;
  const auto ds = pipeline::read_dataset((d / "ds.csds").string());
  EXPECT_EQ(ds.size(), 20u);
  EXPECT_EQ(ds.width, 234u);
  const std::string csv = slurp(d / "ds.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);  // header + one line per sample
}

TEST(Cli, MissingInputIsADataError) {
  const fs::path d = fresh_dir("missing");
  EXPECT_EQ(invoke({"preprocess", "--in", (d / "nothing").string(), "--out", (d / "x.csds").string()}).code,
            cli::kDataError);
  std::ofstream(d / "junk.csir") << "not a recording";
  const CliRun r = invoke({"preprocess", "--in", (d / "junk.csir").string(), "--out", (d / "x.csds").string()});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("BadMagic"), std::string::npos) << r.err;
}

TEST(Cli, TrainEvaluateReport) {
  const fs::path d = fresh_dir("train");
  const fs::path corpus = tiny_corpus(d);
  const std::string cfg = tiny_config(d).string();

  const fs::path model_dir = d / "model";
  const CliRun t = invoke({"train", "--config", cfg, "--in", corpus.string(), "--out", model_dir.string()});
  ASSERT_EQ(t.code, 0) << t.err;
  for (const char* f : {"model.csnn", "history.csv", "metrics.json", "confusion.txt", "run_config.json"}) {
    EXPECT_TRUE(fs::exists(model_dir / f)) << f;
  }
  const auto ck = nn::load_checkpoint((model_dir / "model.csnn").string());
  EXPECT_EQ(ck.model.config().input_h, 18);

  const fs::path scored = d / "scored";
  const CliRun e = invoke({"evaluate", "--config", cfg, "--in", corpus.string(), "--checkpoint",
                     (model_dir / "model.csnn").string(), "--out", scored.string()});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_TRUE(fs::exists(scored / "metrics.json"));

  const fs::path study = d / "study";
  const CliRun s = invoke({"evaluate", "--config", cfg, "--in", corpus.string(), "--study", "loso", "--out", study.string()});
  ASSERT_EQ(s.code, 0) << s.err;
  ASSERT_TRUE(fs::exists(study / "loso.json"));

  const CliRun rep = invoke({"report", "--in", (study / "loso.json").string()});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("silence"), std::string::npos) << rep.out;

  // The same invocation reproduces the report byte for byte.
  const fs::path study2 = d / "study2";
  ASSERT_EQ(invoke({"evaluate", "--config", cfg, "--in", corpus.string(), "--study", "loso", "--out", study2.string()}).code, 0);
  EXPECT_EQ(slurp(study / "loso.json"), slurp(study2 / "loso.json"));

  EXPECT_EQ(invoke({"evaluate", "--config", cfg, "--in", corpus.string(), "--study", "holdout", "--out",
                 (d / "bad").string()})
                .code,
            cli::kUsage);
}

TEST(Cli, NlosStudyWithoutNlosRecordingsFails) {
  const fs::path d = fresh_dir("nlos");
  std::ofstream(d / "plan.txt") << "packets = 108\nnlos_scenarios =\n";
  ASSERT_EQ(invoke({"synth", "--plan", (d / "plan.txt").string(), "--out", (d / "c").string()}).code, 0);
  const CliRun r = invoke({"evaluate", "--config", tiny_config(d).string(), "--in", (d / "c").string(), "--study",
                     "nlos-comparison", "--out", (d / "s").string()});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("MissingCell"), std::string::npos) << r.err;
}

TEST(Cli, GridSearchWritesSixtySixCells) {
  const fs::path d = fresh_dir("grid");
  const fs::path corpus = tiny_corpus(d);
  const fs::path out = d / "grid";
  const CliRun g = invoke({"gridsearch", "--config", tiny_config(d).string(), "--in", corpus.string(), "--out", out.string()});
  ASSERT_EQ(g.code, 0) << g.err;
  const std::string csv = slurp(out / "grid.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 67);

  const fs::path small = d / "grid_small";
  ASSERT_EQ(invoke({"gridsearch", "--config", tiny_config(d).string(), "--in", corpus.string(), "--optimizers",
                 "sgd,adam", "--lrs", "0.01,0.1", "--out", small.string()})
                .code,
            0);
  const std::string csv2 = slurp(small / "grid.csv");
  EXPECT_EQ(std::count(csv2.begin(), csv2.end(), '\n'), 5);
}

TEST(Cli, IngestLoopback) {
  const fs::path d = fresh_dir("ingest");
  std::uint16_t port = 0;
  {
    UdpIngestor probe(0);
    port = probe.port();
  }
  std::mt19937_64 rng(3);
  std::vector<std::vector<std::byte>> grams;
  for (std::uint32_t i = 0; i < 300; ++i) {
    grams.push_back(encode_sniffer_datagram(testkit::random_frame(rng, 256, 80, i / 30.0, i), DatagramLayout::standard()));
  }
  const fs::path out = d / "rec.csir";
  CliRun r;
  std::thread listener([&] {
    r = invoke({"ingest", "--port", std::to_string(port), "--count", "300", "--duration", "20", "--label", "circle",
             "--scenario", "3", "--out", out.string()});
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  // Resend until the listener is satisfied; the first batch may race the bind.
  for (int attempt = 0; attempt < 20 && !fs::exists(out); ++attempt) {
    send_datagrams(port, grams);
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
  listener.join();
  ASSERT_EQ(r.code, 0) << r.err;
  const CsiRecording rec = csir::read_file(out.string());
  EXPECT_EQ(rec.packets(), 300u);
  EXPECT_EQ(rec.label, ActionClass::Circle);
  EXPECT_EQ(rec.scenario_id, 3);
  EXPECT_TRUE(fs::exists(out.string() + ".config.json"));
}

TEST(Cli, IngestUnlabeledAndEmpty) {
  const fs::path d = fresh_dir("ingest2");
  std::uint16_t port = 0;
  {
    UdpIngestor probe(0);
    port = probe.port();
  }
  const CliRun empty = invoke({"ingest", "--port", std::to_string(port), "--duration", "0", "--out", (d / "e.csir").string()});
  EXPECT_EQ(empty.code, cli::kDataError);
  EXPECT_FALSE(fs::exists(d / "e.csir"));

  std::mt19937_64 rng(4);
  std::vector<std::vector<std::byte>> grams;
  for (std::uint32_t i = 0; i < 5; ++i) {
    grams.push_back(encode_sniffer_datagram(testkit::random_frame(rng, 256, 80, i, i), DatagramLayout::standard()));
  }
  const fs::path out = d / "u.csir";
  CliRun r;
  std::thread listener([&] {
    r = invoke({"ingest", "--port", std::to_string(port), "--count", "5", "--duration", "20", "--out", out.string()});
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  for (int attempt = 0; attempt < 20 && !fs::exists(out); ++attempt) {
    send_datagrams(port, grams);
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
  listener.join();
  ASSERT_EQ(r.code, 0) << r.err;
  const auto bytes = slurp(out);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 255u);  // unlabeled code in the header
  EXPECT_FALSE(csir::read_file(out.string()).label.has_value());
}

TEST(Cli, BinaryExitCodes) {
  const std::string exe = CSIARM_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int raw = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("no-such-command"), 1);
  EXPECT_EQ(status("report --in /definitely/not/here.json"), 1);
  const fs::path d = fresh_dir("bin");
  std::ofstream(d / "bad.json") << "{ not json";
  EXPECT_EQ(status("report --in " + (d / "bad.json").string()), 2);
}
