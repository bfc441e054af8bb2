// SPDX-License-Identifier: Apache-2.0
//
// Parametric arm motions. The arm is two reflecting points: the end effector
// and a mid-link (elbow) point. Positions are absolute, derived from the
// robot base of the scene.
#pragma once

#include <vector>

#include "csiarm/csi/types.hpp"
#include "csiarm/synth/scene.hpp"

namespace csiarm::synth {

struct ArmGeometry {
  double shoulder_height = 0.33;  // above the base
  double reach = 0.30;            // horizontal shoulder-to-end-effector distance
  double tool_height = 0.10;      // end effector above the shoulder
  double elbow_lift = 0.12;       // mid-link rises above the shoulder/tool midpoint
  // Along +x, parallel to the link. Facing the link instead makes a base
  // sweep tangential to it, which with tx/rx symmetric about the base barely
  // changes the path length.
  double facing_rad = 0.0;
  // A small end effector against a larger forearm/elbow section. At the
  // default noise these put Arc vs Circle near the edge of separability.
  double end_effector_reflectivity = 0.04;
  double mid_link_reflectivity = 0.35;

  // Motion amplitudes. Arc's lateral excursion (reach * sin 0.4) is close to
  // the circle radius.
  double arc_half_angle_rad = 0.4;
  double circle_radius = 0.12;
  double elbow_swing = 0.10;
};

struct Trajectory {
  ActionClass action = ActionClass::Silence;
  double period_s = 1.0;
  Vec3 base;
  ArmGeometry arm;
};

/// Circle 15 s, Arc 6 s, Elbow 4 s. Silence has no motion; its period is
/// nominal.
double default_period(ActionClass action);

Trajectory make_trajectory(ActionClass action, Vec3 robot_base, const ArmGeometry& arm = {});
Trajectory make_trajectory(ActionClass action, Vec3 robot_base, double period_s,
                           const ArmGeometry& arm = {});

inline constexpr std::size_t kEndEffector = 0;
inline constexpr std::size_t kMidLink = 1;

/// Moving reflection points at time t (>= 0): {end effector, mid-link}.
std::vector<Scatterer> trajectory_at(const Trajectory& traj, double t);

}  // namespace csiarm::synth
