// SPDX-License-Identifier: Apache-2.0
#include "csiarm/csi/types.hpp"

#include <cmath>
#include <string>

#include "csiarm/error.hpp"

namespace csiarm {

std::string_view to_string(ActionClass a) {
  switch (a) {
    case ActionClass::Arc: return "arc";
    case ActionClass::Elbow: return "elbow";
    case ActionClass::Circle: return "circle";
    case ActionClass::Silence: return "silence";
  }
  return "unknown";
}

std::optional<ActionClass> parse_action(std::string_view name) {
  for (ActionClass a : kAllActions) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

std::optional<ActionClass> action_from_code(int c) {
  if (c < 0 || c >= kNumClasses) return std::nullopt;
  return static_cast<ActionClass>(c);
}

int subcarriers_for_bandwidth(int bandwidth_mhz) {
  switch (bandwidth_mhz) {
    case 20: return 64;
    case 40: return 128;
    case 80: return 256;
    case 160: return 512;
    default: return 0;
  }
}

void validate(const CsiRecording& rec) {
  if (rec.frames.empty()) fail(ErrorCode::InvalidRecording, "recording has no frames");
  if (rec.scenario_id < 1 || rec.scenario_id > 4) {
    fail(ErrorCode::InvalidRecording, "scenario_id must be 1-4, got " + std::to_string(rec.scenario_id));
  }
  if (!(rec.sample_rate_hz > 0.0f) || !std::isfinite(rec.sample_rate_hz)) {
    fail(ErrorCode::InvalidRecording, "sample rate must be positive");
  }
  const CsiFrame& first = rec.frames.front();
  const int width = subcarriers_for_bandwidth(first.bandwidth_mhz);
  if (width == 0) {
    fail(ErrorCode::InvalidRecording, "unsupported bandwidth " + std::to_string(first.bandwidth_mhz));
  }
  double last_ts = -INFINITY;
  for (std::size_t i = 0; i < rec.frames.size(); ++i) {
    const CsiFrame& f = rec.frames[i];
    if (f.channel != first.channel || f.bandwidth_mhz != first.bandwidth_mhz) {
      fail(ErrorCode::InvalidRecording, "frame " + std::to_string(i) + " changes channel/bandwidth");
    }
    if (static_cast<int>(f.subcarriers.size()) != width) {
      fail(ErrorCode::InvalidRecording, "frame " + std::to_string(i) + " has " +
                                            std::to_string(f.subcarriers.size()) + " subcarriers, expected " +
                                            std::to_string(width));
    }
    if (!std::isfinite(f.timestamp) || f.timestamp < last_ts) {
      fail(ErrorCode::InvalidRecording, "frame " + std::to_string(i) + " timestamp goes backwards");
    }
    last_ts = f.timestamp;
    for (const ComplexSample& s : f.subcarriers) {
      if (!std::isfinite(s.re) || !std::isfinite(s.im)) {
        fail(ErrorCode::InvalidRecording, "frame " + std::to_string(i) + " has a non-finite sample");
      }
    }
  }
}

}  // namespace csiarm
