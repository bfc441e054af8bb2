// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace csiarm {

/// Arm motion classes. The integer codes are stable: they appear in CSIR
/// headers, dataset containers and confusion-matrix row order.
enum class ActionClass : std::uint8_t { Arc = 0, Elbow = 1, Circle = 2, Silence = 3 };

inline constexpr int kNumClasses = 4;
inline constexpr std::array<ActionClass, kNumClasses> kAllActions{
    ActionClass::Arc, ActionClass::Elbow, ActionClass::Circle, ActionClass::Silence};

constexpr int code(ActionClass a) { return static_cast<int>(a); }
std::string_view to_string(ActionClass a);
std::optional<ActionClass> parse_action(std::string_view name);
std::optional<ActionClass> action_from_code(int code);

struct ComplexSample {
  float re = 0.0f;
  float im = 0.0f;

  friend bool operator==(const ComplexSample&, const ComplexSample&) = default;
};

inline constexpr int kSubcarriers = 256;  // 80 MHz
inline constexpr std::uint16_t kDefaultChannel = 36;
inline constexpr std::uint16_t kDefaultBandwidthMhz = 80;

/// Number of OFDM tones for a bandwidth (312.5 kHz spacing); 0 if unknown.
int subcarriers_for_bandwidth(int bandwidth_mhz);

struct CsiFrame {
  double timestamp = 0.0;  // seconds
  std::uint32_t seq = 0;
  std::int16_t rssi = 0;  // dBm, informational only
  std::uint16_t channel = kDefaultChannel;
  std::uint16_t bandwidth_mhz = kDefaultBandwidthMhz;
  std::vector<ComplexSample> subcarriers;

  friend bool operator==(const CsiFrame&, const CsiFrame&) = default;
};

/// H in C^{N x W}: one row per received packet.
struct CsiRecording {
  std::vector<CsiFrame> frames;
  std::optional<ActionClass> label;
  std::uint8_t scenario_id = 1;
  bool los = true;
  float sample_rate_hz = 30.0f;

  std::size_t packets() const { return frames.size(); }

  friend bool operator==(const CsiRecording&, const CsiRecording&) = default;
};

/// Throws Error(InvalidRecording) when a type invariant is violated.
void validate(const CsiRecording& rec);

}  // namespace csiarm
