// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: csiarm <subcommand> [options].
//
// Settings come from defaults, then an optional JSON config file (--config),
// then flags; later sources win. Every output directory receives
// run_config.json with the fully resolved settings.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "csiarm/eval/case_study.hpp"
#include "csiarm/nn/grid.hpp"
#include "csiarm/synth/corpus.hpp"
#include "csiarm/synth/scene.hpp"

namespace csiarm::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInvariantViolation = 3 };

struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 1;

  // Scene overrides on top of synth::default_scene().
  std::optional<double> noise_std;
  double obstacle_attenuation_db = 15.0;
  double scenario_step_m = 0.12;

  synth::CorpusPlan plan;

  std::size_t window = 300;
  std::size_t stride = 97;
  std::optional<std::size_t> per_class = 100;  // unset: balance to the smallest class
  pipeline::NormMode norm = pipeline::NormMode::PerSampleStandardize;

  nn::ModelConfig model;
  nn::TrainConfig train;
  double test_fraction = 0.2;  // train: share scored after training
  double val_fraction = 0.2;   // share of the training part used for early stopping

  int folds = 5;
  std::vector<int> scenarios{1, 2, 3, 4};
  int nlos_scenario = 2;

  nn::GridSpec grid;
};

nlohmann::json to_json(const RunConfig& c);
/// Applies the keys present in `j` on top of `base`. Unknown keys and wrong
/// types raise Error(InvalidArgument) naming the key.
RunConfig apply_json(RunConfig base, const nlohmann::json& j);

synth::SceneConfig scene_of(const RunConfig& c);
eval::StudyConfig study_of(const RunConfig& c);

/// Loads CSIR recordings from files and directories (every *.csir inside,
/// name order). Throws when nothing is found.
std::vector<CsiRecording> load_recordings(const std::vector<std::string>& paths,
                                          std::vector<std::string>* names = nullptr);

/// `args` excludes the program name. Output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace csiarm::cli
