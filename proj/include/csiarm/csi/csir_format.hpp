// SPDX-License-Identifier: Apache-2.0
//
// CSIR v1 recording container. All fields little-endian.
//
//   header, 32 bytes
//     0  magic "CSIR"       4
//     4  version u16 = 1    2
//     6  label u8           1   0-3, 255 = unlabeled
//     7  scenario u8        1
//     8  los u8             1   0/1
//     9  pad u8 x 3         3
//    12  N u32              4   frame count
//    16  W u16 = 256        2
//    18  sample_rate f32    4
//    22  channel u16        2
//    24  bandwidth_mhz u16  2
//    26  reserved           6
//   then N frame records of 24 + W*8 bytes
//     0  timestamp f64      8
//     8  seq u32            4
//    12  rssi i16           2
//    14  pad u16            2
//    16  reserved           8
//    24  W x (re f32, im f32)
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "csiarm/csi/types.hpp"

namespace csiarm::csir {

inline constexpr char kMagic[4] = {'C', 'S', 'I', 'R'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 32;
inline constexpr std::size_t kFramePrefixSize = 24;
inline constexpr std::uint8_t kUnlabeled = 255;

constexpr std::size_t frame_record_size(std::size_t width) { return kFramePrefixSize + width * 8; }

std::vector<std::byte> encode(const CsiRecording& rec);

/// Never crashes on arbitrary input; failures raise Error with BadMagic,
/// UnsupportedVersion, TruncatedPayload or CorruptFrame.
CsiRecording decode(std::span<const std::byte> bytes);

void write_file(const std::string& path, const CsiRecording& rec);
CsiRecording read_file(const std::string& path);

}  // namespace csiarm::csir
