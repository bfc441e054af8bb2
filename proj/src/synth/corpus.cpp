// SPDX-License-Identifier: Apache-2.0
#include "csiarm/synth/corpus.hpp"

#include <charconv>
#include <sstream>

#include "csiarm/error.hpp"
#include "csiarm/parallel.hpp"
#include "csiarm/synth/channel.hpp"
#include "csiarm/synth/trajectory.hpp"

namespace csiarm::synth {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

[[noreturn]] void plan_error(int line, std::string_view key, const std::string& why) {
  fail(ErrorCode::BadPlan, "line " + std::to_string(line) + ", key '" + std::string(key) + "': " + why);
}

template <typename T>
T parse_number(int line, std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) plan_error(line, key, "not a number: " + std::string(v));
  return out;
}

std::vector<int> parse_scenarios(int line, std::string_view key, std::string_view v) {
  std::vector<int> out;
  for (auto item : split_list(v)) {
    const int s = parse_number<int>(line, key, item);
    if (s < 1 || s > 4) plan_error(line, key, "scenario must be 1-4");
    out.push_back(s);
  }
  return out;
}

bool parse_bool(int line, std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  plan_error(line, key, "expected true/false");
}

}  // namespace

CorpusPlan parse_corpus_plan(std::string_view text) {
  CorpusPlan plan;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) plan_error(line_no, trim(line), "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));

    if (key == "scenarios") {
      plan.scenarios = parse_scenarios(line_no, key, value);
    } else if (key == "nlos_scenarios") {
      plan.nlos_scenarios = parse_scenarios(line_no, key, value);
    } else if (key == "actions") {
      plan.actions.clear();
      for (auto item : split_list(value)) {
        const auto a = parse_action(item);
        if (!a) plan_error(line_no, key, "unknown action " + std::string(item));
        plan.actions.push_back(*a);
      }
    } else if (key == "los") {
      plan.los = parse_bool(line_no, key, value);
    } else if (key == "packets") {
      plan.packets = parse_number<std::size_t>(line_no, key, value);
      if (plan.packets < 1) plan_error(line_no, key, "must be >= 1");
    } else if (key == "rate") {
      plan.rate_hz = parse_number<double>(line_no, key, value);
      if (!(plan.rate_hz > 0.0)) plan_error(line_no, key, "must be positive");
    } else if (key == "seed") {
      plan.seed = parse_number<std::uint64_t>(line_no, key, value);
    } else if (key == "noise_std") {
      if (value == "default") {
        plan.noise_std.reset();
      } else {
        plan.noise_std = parse_number<double>(line_no, key, value);
        if (!(*plan.noise_std >= 0.0)) plan_error(line_no, key, "must be >= 0");
      }
    } else if (key == "recordings_per_cell") {
      plan.recordings_per_cell = parse_number<int>(line_no, key, value);
      if (plan.recordings_per_cell < 1) plan_error(line_no, key, "must be >= 1");
    } else {
      plan_error(line_no, key, "unknown key");
    }
  }
  return plan;
}

std::string format_corpus_plan(const CorpusPlan& plan) {
  std::ostringstream os;
  auto ints = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  os << "scenarios = " << ints(plan.scenarios) << "\n";
  os << "actions = ";
  for (std::size_t i = 0; i < plan.actions.size(); ++i) os << (i ? "," : "") << to_string(plan.actions[i]);
  os << "\n";
  os << "los = " << (plan.los ? "true" : "false") << "\n";
  os << "nlos_scenarios = " << ints(plan.nlos_scenarios) << "\n";
  os << "packets = " << plan.packets << "\n";
  os << "rate = " << plan.rate_hz << "\n";
  os << "seed = " << plan.seed << "\n";
  if (plan.noise_std) {
    os << "noise_std = " << *plan.noise_std << "\n";
  } else {
    os << "noise_std = default\n";
  }
  os << "recordings_per_cell = " << plan.recordings_per_cell << "\n";
  return os.str();
}

std::vector<CorpusCell> plan_cells(const CorpusPlan& plan) {
  std::vector<CorpusCell> cells;
  auto emit = [&](int scenario, bool los) {
    for (ActionClass a : plan.actions) {
      for (int i = 0; i < plan.recordings_per_cell; ++i) cells.push_back({scenario, a, los, i});
    }
  };
  if (plan.los) {
    for (int s : plan.scenarios) emit(s, true);
  }
  for (int s : plan.nlos_scenarios) emit(s, false);
  return cells;
}

SceneConfig scene_for_cell(const SceneConfig& base, const CorpusPlan& plan, const CorpusCell& cell) {
  SceneConfig scene = base;
  scene.rx_pos = base.rx_pos + (static_cast<double>(cell.scenario - 1) * base.scenario_step_m) * base.scenario_axis;
  if (cell.los) {
    scene.obstacle.reset();
  } else if (!scene.obstacle) {
    scene.obstacle = default_obstacle(base);
  }
  if (plan.noise_std) scene.noise_std = *plan.noise_std;
  scene.seed = derive_seed(plan.seed, static_cast<std::uint64_t>(cell.scenario),
                           static_cast<std::uint64_t>(code(cell.action)), cell.los ? 1 : 0,
                           static_cast<std::uint64_t>(cell.index));
  return scene;
}

std::string recording_file_name(const CorpusCell& cell) {
  return std::string(to_string(cell.action)) + "_" + std::to_string(cell.scenario) + "_" +
         (cell.los ? "los" : "nlos") + "_" + std::to_string(cell.index) + ".csir";
}

CsiRecording generate_cell(const SceneConfig& base, const CorpusPlan& plan, const CorpusCell& cell) {
  const SceneConfig scene = scene_for_cell(base, plan, cell);
  const Trajectory traj = make_trajectory(cell.action, scene.robot_base);
  CsiRecording rec = generate_recording(scene, traj, plan.packets, plan.rate_hz);
  rec.scenario_id = static_cast<std::uint8_t>(cell.scenario);
  rec.los = cell.los;
  return rec;
}

std::vector<CsiRecording> generate_corpus(const SceneConfig& base, const CorpusPlan& plan, int threads) {
  const auto cells = plan_cells(plan);
  std::vector<CsiRecording> out(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) { out[i] = generate_cell(base, plan, cells[i]); });
  return out;
}

}  // namespace csiarm::synth
