// SPDX-License-Identifier: Apache-2.0
//
// "CSNN" v1 model checkpoint, little-endian:
//
//    0  magic "CSNN", u16 version, u16 reserved
//    8  i32 input_h, input_w, input_c, filters[3], kernel, pool, dense_units, classes
//   48  u8 conv_relu, 7 reserved
//   56  f64 dropout, l1, l2
//   80  u8 norm mode, 7 reserved, f64 norm min, f64 norm max
//  104  u32 parameter count
//  then per parameter: u16 name length, name, u8 rank, i32 dims[rank],
//                      u64 element count, float32 values
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "csiarm/nn/model.hpp"
#include "csiarm/pipeline/pipeline.hpp"

namespace csiarm::nn {

struct Checkpoint {
  CnnModel model;
  pipeline::NormStats norm;
};

std::vector<std::byte> encode_checkpoint(const CnnModel& model, const pipeline::NormStats& norm);
/// Throws BadMagic, UnsupportedVersion, TruncatedPayload, BadCheckpoint.
Checkpoint decode_checkpoint(std::span<const std::byte> bytes);

void save_checkpoint(const std::string& path, const CnnModel& model, const pipeline::NormStats& norm);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace csiarm::nn
