// SPDX-License-Identifier: Apache-2.0
#include "csiarm/eval/splits.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <string>

#include "csiarm/error.hpp"
#include "csiarm/parallel.hpp"

namespace csiarm::eval {

std::vector<Split> stratified_kfold(const pipeline::LabeledDataset& ds, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::TooFewSamples, "k must be >= 2, got " + std::to_string(k));
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(code(ds.info[i].label))].push_back(i);

  std::vector<int> fold_of(ds.size(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0x4b464f4c44));
  std::size_t offset = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    if (idx.size() < static_cast<std::size_t>(k)) {
      fail(ErrorCode::TooFewSamples, "class " + std::string(to_string(static_cast<ActionClass>(c))) + " has " +
                                         std::to_string(idx.size()) + " samples for " + std::to_string(k) + " folds");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    // Continue dealing where the previous class stopped so total fold sizes
    // stay within one of each other as well.
    for (std::size_t j = 0; j < idx.size(); ++j) fold_of[idx[j]] = static_cast<int>((offset + j) % k);
    offset = (offset + idx.size()) % k;
  }

  std::vector<Split> splits(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int f = 0; f < k; ++f) {
      (fold_of[i] == f ? splits[f].test : splits[f].train).push_back(i);
    }
  }
  return splits;
}

LosoPlan leave_one_scenario_out(std::span<const pipeline::LabeledDataset> per_scenario) {
  std::set<int> seen;
  std::vector<int> ids;
  for (std::size_t d = 0; d < per_scenario.size(); ++d) {
    const auto& ds = per_scenario[d];
    if (ds.size() == 0) fail(ErrorCode::MissingScenario, "dataset " + std::to_string(d) + " is empty");
    const int s = ds.info.front().scenario_id;
    for (const auto& info : ds.info) {
      if (info.scenario_id != s) fail(ErrorCode::MissingScenario, "dataset " + std::to_string(d) + " mixes scenarios");
    }
    if (!seen.insert(s).second) fail(ErrorCode::MissingScenario, "scenario " + std::to_string(s) + " given twice");
    ids.push_back(s);
  }
  for (int s = 1; s <= 4; ++s) {
    if (!seen.count(s)) fail(ErrorCode::MissingScenario, "scenario " + std::to_string(s) + " is missing");
  }
  if (per_scenario.size() != 4) fail(ErrorCode::MissingScenario, "expected exactly 4 scenarios");

  LosoPlan plan;
  for (const auto& ds : per_scenario) plan.pooled.append(ds);
  for (int held : ids) {
    Split sp;
    for (std::size_t i = 0; i < plan.pooled.size(); ++i) {
      (plan.pooled.info[i].scenario_id == held ? sp.test : sp.train).push_back(i);
    }
    plan.held_out.push_back(held);
    plan.splits.push_back(std::move(sp));
  }
  return plan;
}

}  // namespace csiarm::eval
