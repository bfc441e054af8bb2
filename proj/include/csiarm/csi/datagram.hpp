// SPDX-License-Identifier: Apache-2.0
//
// Sniffer datagram decoding. Firmware payloads differ between chips, so the
// byte layout is a parameter instead of a hard-coded struct.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csiarm/csi/types.hpp"

namespace csiarm {

struct DatagramLayout {
  std::string magic;  // checked at offset 0 when non-empty
  std::size_t header_len = 0;
  std::optional<std::size_t> timestamp_offset;  // f64 seconds
  std::optional<std::size_t> seq_offset;        // u32
  std::optional<std::size_t> rssi_offset;       // i16
  std::size_t iq_offset = 0;                    // W pairs of (I i16, Q i16)
  int subcarriers = kSubcarriers;
  bool little_endian = true;
  double scale = 1.0;  // applied to raw int16 I/Q
  std::uint16_t channel = kDefaultChannel;
  std::uint16_t bandwidth_mhz = kDefaultBandwidthMhz;

  std::size_t min_payload() const { return iq_offset + static_cast<std::size_t>(subcarriers) * 4; }

  /// "CSIF" | timestamp f64 | seq u32 | rssi i16 | pad u16 | 256 x (I, Q) int16.
  /// The header fields mirror the CSIR frame record.
  static DatagramLayout standard();
};

/// Errors: BadMagic, LengthMismatch (payload shorter than the I/Q block end).
CsiFrame decode_sniffer_datagram(std::span<const std::byte> payload, const DatagramLayout& layout);

/// Inverse of decode for loopback senders and tests. I/Q values are divided
/// by `scale`, rounded and saturated to int16.
std::vector<std::byte> encode_sniffer_datagram(const CsiFrame& frame, const DatagramLayout& layout);

}  // namespace csiarm
