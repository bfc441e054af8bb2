// SPDX-License-Identifier: Apache-2.0
#include "csiarm/csi/datagram.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "csiarm/error.hpp"

namespace csiarm {
namespace {

template <typename T>
T load(std::span<const std::byte> p, std::size_t offset, bool little) {
  T v;
  std::memcpy(&v, p.data() + offset, sizeof(T));
  const bool native_little = std::endian::native == std::endian::little;
  if (little != native_little && sizeof(T) > 1) {
    auto* raw = reinterpret_cast<std::byte*>(&v);
    std::reverse(raw, raw + sizeof(T));
  }
  return v;
}

template <typename T>
void store(std::vector<std::byte>& p, std::size_t offset, T v, bool little) {
  const bool native_little = std::endian::native == std::endian::little;
  auto* raw = reinterpret_cast<std::byte*>(&v);
  if (little != native_little && sizeof(T) > 1) std::reverse(raw, raw + sizeof(T));
  std::memcpy(p.data() + offset, raw, sizeof(T));
}

void check_field(std::optional<std::size_t> off, std::size_t width, std::size_t size) {
  if (off && *off + width > size) {
    fail(ErrorCode::LengthMismatch, "header field at " + std::to_string(*off) + " beyond payload");
  }
}

std::int16_t saturate(double v) {
  const double r = std::nearbyint(v);
  return static_cast<std::int16_t>(std::clamp(r, double(std::numeric_limits<std::int16_t>::min()),
                                              double(std::numeric_limits<std::int16_t>::max())));
}

}  // namespace

DatagramLayout DatagramLayout::standard() {
  DatagramLayout l;
  l.magic = "CSIF";
  l.header_len = 20;
  l.timestamp_offset = 4;
  l.seq_offset = 12;
  l.rssi_offset = 16;
  l.iq_offset = 20;
  return l;
}

CsiFrame decode_sniffer_datagram(std::span<const std::byte> payload, const DatagramLayout& layout) {
  if (!layout.magic.empty()) {
    if (payload.size() < layout.magic.size() ||
        std::memcmp(payload.data(), layout.magic.data(), layout.magic.size()) != 0) {
      fail(ErrorCode::BadMagic, "datagram magic mismatch");
    }
  }
  if (payload.size() < std::max(layout.min_payload(), layout.header_len)) {
    fail(ErrorCode::LengthMismatch, "datagram of " + std::to_string(payload.size()) + " bytes, need " +
                                        std::to_string(layout.min_payload()));
  }
  check_field(layout.timestamp_offset, 8, payload.size());
  check_field(layout.seq_offset, 4, payload.size());
  check_field(layout.rssi_offset, 2, payload.size());

  const bool le = layout.little_endian;
  CsiFrame f;
  f.channel = layout.channel;
  f.bandwidth_mhz = layout.bandwidth_mhz;
  if (layout.timestamp_offset) f.timestamp = load<double>(payload, *layout.timestamp_offset, le);
  if (layout.seq_offset) f.seq = load<std::uint32_t>(payload, *layout.seq_offset, le);
  if (layout.rssi_offset) f.rssi = load<std::int16_t>(payload, *layout.rssi_offset, le);
  if (!std::isfinite(f.timestamp)) fail(ErrorCode::CorruptFrame, "non-finite timestamp");

  f.subcarriers.resize(static_cast<std::size_t>(layout.subcarriers));
  for (int k = 0; k < layout.subcarriers; ++k) {
    const std::size_t off = layout.iq_offset + static_cast<std::size_t>(k) * 4;
    const auto i = load<std::int16_t>(payload, off, le);
    const auto q = load<std::int16_t>(payload, off + 2, le);
    f.subcarriers[static_cast<std::size_t>(k)] = {static_cast<float>(i * layout.scale),
                                                  static_cast<float>(q * layout.scale)};
  }
  return f;
}

std::vector<std::byte> encode_sniffer_datagram(const CsiFrame& frame, const DatagramLayout& layout) {
  if (static_cast<int>(frame.subcarriers.size()) != layout.subcarriers) {
    fail(ErrorCode::LengthMismatch, "frame width does not match layout");
  }
  std::vector<std::byte> p(std::max(layout.min_payload(), layout.header_len), std::byte{0});
  std::memcpy(p.data(), layout.magic.data(), layout.magic.size());
  const bool le = layout.little_endian;
  if (layout.timestamp_offset) store<double>(p, *layout.timestamp_offset, frame.timestamp, le);
  if (layout.seq_offset) store<std::uint32_t>(p, *layout.seq_offset, frame.seq, le);
  if (layout.rssi_offset) store<std::int16_t>(p, *layout.rssi_offset, frame.rssi, le);
  for (int k = 0; k < layout.subcarriers; ++k) {
    const ComplexSample& s = frame.subcarriers[static_cast<std::size_t>(k)];
    const std::size_t off = layout.iq_offset + static_cast<std::size_t>(k) * 4;
    store<std::int16_t>(p, off, saturate(s.re / layout.scale), le);
    store<std::int16_t>(p, off + 2, saturate(s.im / layout.scale), le);
  }
  return p;
}

}  // namespace csiarm
