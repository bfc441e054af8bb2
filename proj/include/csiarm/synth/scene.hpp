// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace csiarm::synth {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

/// Axis-aligned box obstacle.
struct Box {
  Vec3 lo;
  Vec3 hi;

  Vec3 size() const { return hi - lo; }
  /// True when the closed segment [a, b] passes through the box (slab test).
  bool intersects_segment(Vec3 a, Vec3 b) const;
};

struct Scatterer {
  Vec3 position;
  double reflectivity = 0.0;  // [0, 1]
};

struct SceneConfig {
  Vec3 tx_pos;
  Vec3 rx_pos;
  Vec3 robot_base;
  std::vector<Scatterer> static_scatterers;
  std::optional<Box> obstacle;
  double carrier_hz = 5.18e9;  // channel 36
  double bandwidth_hz = 80e6;
  double noise_std = 0.0;              // complex noise std per subcarrier, linear amplitude
  double obstacle_attenuation_db = 15.0;  // applied to every path leg crossing the obstacle
  std::uint64_t seed = 0;
  Vec3 scenario_axis{0.0, 1.0, 0.0};  // receiver displacement direction between scenarios
  double scenario_step_m = 0.12;
};

/// Desk-scale room: 5 x 5 m, tx and rx 3 m apart, robot beside the link.
/// noise_std defaults to 5% of the line-of-sight amplitude.
SceneConfig default_scene();

/// 0.10 x 0.20 x 1.00 m box standing on the floor just in front of the
/// transmitter, across the direct path.
Box default_obstacle(const SceneConfig& scene);

/// Throws InvalidScene.
void validate(const SceneConfig& scene);

}  // namespace csiarm::synth
