// SPDX-License-Identifier: Apache-2.0
#include "csiarm/synth/scene.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "csiarm/error.hpp"

namespace csiarm::synth {

bool Box::intersects_segment(Vec3 a, Vec3 b) const {
  double t0 = 0.0, t1 = 1.0;
  const double origin[3] = {a.x, a.y, a.z};
  const double dir[3] = {b.x - a.x, b.y - a.y, b.z - a.z};
  const double lo_[3] = {lo.x, lo.y, lo.z};
  const double hi_[3] = {hi.x, hi.y, hi.z};
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(dir[axis]) < 1e-15) {
      if (origin[axis] < lo_[axis] || origin[axis] > hi_[axis]) return false;
      continue;
    }
    double ta = (lo_[axis] - origin[axis]) / dir[axis];
    double tb = (hi_[axis] - origin[axis]) / dir[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

SceneConfig default_scene() {
  SceneConfig s;
  s.tx_pos = {1.0, 2.5, 0.8};
  s.rx_pos = {4.0, 2.5, 0.8};
  s.robot_base = {2.5, 3.1, 0.75};  // table-mounted arm, 0.6 m off the direct path
  s.static_scatterers = {
      {{2.5, 0.05, 1.2}, 0.6},   // walls
      {{2.5, 4.95, 1.2}, 0.5},
      {{0.05, 2.0, 1.0}, 0.4},
      {{4.95, 3.0, 1.0}, 0.4},
      {{3.3, 1.4, 0.7}, 0.3},    // furniture
      {{1.8, 3.8, 0.9}, 0.3},
  };
  s.noise_std = 0.05 / distance(s.tx_pos, s.rx_pos);
  s.seed = 1;
  return s;
}

Box default_obstacle(const SceneConfig& scene) {
  const Vec3 t = scene.tx_pos;
  return Box{{t.x + 0.10, t.y - 0.10, 0.0}, {t.x + 0.20, t.y + 0.10, 1.0}};
}

void validate(const SceneConfig& scene) {
  if (distance(scene.tx_pos, scene.rx_pos) <= 0.0) {
    fail(ErrorCode::InvalidScene, "transmitter and receiver coincide");
  }
  for (std::size_t i = 0; i < scene.static_scatterers.size(); ++i) {
    const double r = scene.static_scatterers[i].reflectivity;
    if (!(r >= 0.0 && r <= 1.0)) {
      fail(ErrorCode::InvalidScene, "scatterer " + std::to_string(i) + " reflectivity outside [0,1]");
    }
  }
  if (!(scene.noise_std >= 0.0)) fail(ErrorCode::InvalidScene, "noise_std must be >= 0");
  if (!(scene.carrier_hz > 0.0) || !(scene.bandwidth_hz > 0.0)) {
    fail(ErrorCode::InvalidScene, "carrier and bandwidth must be positive");
  }
}

}  // namespace csiarm::synth
