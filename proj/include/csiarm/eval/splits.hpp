// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csiarm/pipeline/pipeline.hpp"

namespace csiarm::eval {

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// k folds; every class is dealt round-robin after a seeded shuffle, so
/// per-class fold sizes differ by at most one. Throws TooFewSamples when
/// k < 2 or a present class has fewer than k samples.
std::vector<Split> stratified_kfold(const pipeline::LabeledDataset& ds, int k, std::uint64_t seed);

struct LosoPlan {
  pipeline::LabeledDataset pooled;  // scenarios concatenated in input order
  std::vector<int> held_out;        // scenario id per split
  std::vector<Split> splits;        // indices into pooled
};

/// Split i tests on scenario i and trains on the others. Inputs must be four
/// single-scenario datasets covering scenarios 1..4 with matching shapes;
/// throws MissingScenario otherwise.
LosoPlan leave_one_scenario_out(std::span<const pipeline::LabeledDataset> per_scenario);

}  // namespace csiarm::eval
