// SPDX-License-Identifier: Apache-2.0
#include "csiarm/csi/csir_format.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "csiarm/error.hpp"
#include "csiarm/io/bytes.hpp"

namespace csiarm::csir {

std::vector<std::byte> encode(const CsiRecording& rec) {
  validate(rec);
  const CsiFrame& first = rec.frames.front();
  const std::size_t width = first.subcarriers.size();

  std::vector<std::byte> out;
  out.reserve(kHeaderSize + rec.frames.size() * frame_record_size(width));
  io::ByteWriter w(out);
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint8_t>(rec.label ? static_cast<std::uint8_t>(code(*rec.label)) : kUnlabeled);
  w.put<std::uint8_t>(rec.scenario_id);
  w.put<std::uint8_t>(rec.los ? 1 : 0);
  w.pad(3);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.frames.size()));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(width));
  w.put<float>(rec.sample_rate_hz);
  w.put<std::uint16_t>(first.channel);
  w.put<std::uint16_t>(first.bandwidth_mhz);
  w.pad(6);

  for (const CsiFrame& f : rec.frames) {
    w.put<double>(f.timestamp);
    w.put<std::uint32_t>(f.seq);
    w.put<std::int16_t>(f.rssi);
    w.pad(2 + 8);
    for (const ComplexSample& s : f.subcarriers) {
      w.put<float>(s.re);
      w.put<float>(s.im);
    }
  }
  return out;
}

CsiRecording decode(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::BadMagic, "not a CSIR file");
  }
  io::ByteReader r(bytes, ErrorCode::TruncatedPayload);
  r.skip(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion) {
    fail(ErrorCode::UnsupportedVersion, "CSIR version " + std::to_string(version));
  }
  const auto label = r.get<std::uint8_t>();
  const auto scenario = r.get<std::uint8_t>();
  const auto los = r.get<std::uint8_t>();
  r.skip(3);
  const auto n = r.get<std::uint32_t>();
  const auto width = r.get<std::uint16_t>();
  const auto rate = r.get<float>();
  const auto channel = r.get<std::uint16_t>();
  const auto bandwidth = r.get<std::uint16_t>();
  r.skip(6);

  if (label != kUnlabeled && !action_from_code(label)) {
    fail(ErrorCode::CorruptFrame, "label code " + std::to_string(label));
  }
  if (scenario < 1 || scenario > 4) fail(ErrorCode::CorruptFrame, "scenario " + std::to_string(scenario));
  if (los > 1) fail(ErrorCode::CorruptFrame, "los flag " + std::to_string(los));
  if (n == 0) fail(ErrorCode::CorruptFrame, "zero frames");
  if (width != kSubcarriers || subcarriers_for_bandwidth(bandwidth) != width) {
    fail(ErrorCode::CorruptFrame, "width " + std::to_string(width) + " at " + std::to_string(bandwidth) + " MHz");
  }
  if (!std::isfinite(rate) || !(rate > 0.0f)) fail(ErrorCode::CorruptFrame, "sample rate");

  const std::size_t record = frame_record_size(width);
  if (r.remaining() / record < n) {
    fail(ErrorCode::TruncatedPayload, "header declares " + std::to_string(n) + " frames, payload holds " +
                                          std::to_string(r.remaining() / record));
  }
  if (r.remaining() != static_cast<std::size_t>(n) * record) {
    fail(ErrorCode::CorruptFrame, "trailing bytes after last frame");
  }

  CsiRecording rec;
  rec.label = label == kUnlabeled ? std::nullopt : action_from_code(label);
  rec.scenario_id = scenario;
  rec.los = los == 1;
  rec.sample_rate_hz = rate;
  rec.frames.resize(n);
  double last_ts = -INFINITY;
  for (std::uint32_t i = 0; i < n; ++i) {
    CsiFrame& f = rec.frames[i];
    f.timestamp = r.get<double>();
    f.seq = r.get<std::uint32_t>();
    f.rssi = r.get<std::int16_t>();
    r.skip(2 + 8);
    f.channel = channel;
    f.bandwidth_mhz = bandwidth;
    if (!std::isfinite(f.timestamp) || f.timestamp < last_ts) {
      fail(ErrorCode::CorruptFrame, "frame " + std::to_string(i) + " timestamp");
    }
    last_ts = f.timestamp;
    f.subcarriers.resize(width);
    for (ComplexSample& s : f.subcarriers) {
      s.re = r.get<float>();
      s.im = r.get<float>();
      if (!std::isfinite(s.re) || !std::isfinite(s.im)) {
        fail(ErrorCode::CorruptFrame, "frame " + std::to_string(i) + " holds a non-finite sample");
      }
    }
  }
  return rec;
}

void write_file(const std::string& path, const CsiRecording& rec) { io::write_file(path, encode(rec)); }

CsiRecording read_file(const std::string& path) { return decode(io::read_file(path)); }

}  // namespace csiarm::csir
