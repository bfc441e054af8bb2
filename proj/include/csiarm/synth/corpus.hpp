// SPDX-License-Identifier: Apache-2.0
//
// Corpus plans: which (scenario, action, LOS/NLOS) cells to synthesize.
//
// Plan files are line-oriented `key = value` text; '#' starts a comment.
//
//   scenarios       = 1,2,3,4        line-of-sight scenarios to generate
//   actions         = arc,elbow,circle,silence
//   los             = true           emit the line-of-sight cells
//   nlos_scenarios  = 2              scenarios that also get an obstacle run
//   packets         = 10000
//   rate            = 30             Hz
//   seed            = 1
//   noise_std       = default        or a linear amplitude
//   recordings_per_cell = 1
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "csiarm/csi/types.hpp"
#include "csiarm/synth/scene.hpp"

namespace csiarm::synth {

struct CorpusPlan {
  std::vector<int> scenarios{1, 2, 3, 4};
  std::vector<ActionClass> actions{kAllActions.begin(), kAllActions.end()};
  bool los = true;
  std::vector<int> nlos_scenarios{2};
  std::size_t packets = 10000;
  double rate_hz = 30.0;
  std::uint64_t seed = 1;
  std::optional<double> noise_std;  // unset: keep the scene's default
  int recordings_per_cell = 1;
};

/// Throws BadPlan naming the offending key and line.
CorpusPlan parse_corpus_plan(std::string_view text);
std::string format_corpus_plan(const CorpusPlan& plan);

struct CorpusCell {
  int scenario = 1;
  ActionClass action = ActionClass::Silence;
  bool los = true;
  int index = 0;

  friend bool operator==(const CorpusCell&, const CorpusCell&) = default;
};

/// Cells in generation order: LOS cells scenario-major, then NLOS cells.
std::vector<CorpusCell> plan_cells(const CorpusPlan& plan);

/// Scene for one cell: receiver shifted by (scenario - 1) * step along the
/// scenario axis, obstacle inserted for NLOS, seed derived from the cell.
SceneConfig scene_for_cell(const SceneConfig& base, const CorpusPlan& plan, const CorpusCell& cell);

/// `{action}_{scenario}_{los|nlos}_{idx}.csir`
std::string recording_file_name(const CorpusCell& cell);

std::vector<CsiRecording> generate_corpus(const SceneConfig& base, const CorpusPlan& plan, int threads = 1);

CsiRecording generate_cell(const SceneConfig& base, const CorpusPlan& plan, const CorpusCell& cell);

}  // namespace csiarm::synth
