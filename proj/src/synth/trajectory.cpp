// SPDX-License-Identifier: Apache-2.0
#include "csiarm/synth/trajectory.hpp"

#include <cmath>
#include <numbers>

#include "csiarm/error.hpp"

namespace csiarm::synth {
namespace {

Vec3 shoulder(const Trajectory& tr) { return tr.base + Vec3{0.0, 0.0, tr.arm.shoulder_height}; }

Vec3 tool_at_angle(const Trajectory& tr, double heading) {
  const ArmGeometry& a = tr.arm;
  return shoulder(tr) + Vec3{a.reach * std::cos(heading), a.reach * std::sin(heading), a.tool_height};
}

Vec3 mid_link_for(const Trajectory& tr, Vec3 tool) {
  const Vec3 s = shoulder(tr);
  return s + 0.5 * (tool - s) + Vec3{0.0, 0.0, tr.arm.elbow_lift};
}

}  // namespace

double default_period(ActionClass action) {
  switch (action) {
    case ActionClass::Arc: return 6.0;
    case ActionClass::Elbow: return 4.0;
    case ActionClass::Circle: return 15.0;
    case ActionClass::Silence: return 1.0;
  }
  return 1.0;
}

Trajectory make_trajectory(ActionClass action, Vec3 robot_base, const ArmGeometry& arm) {
  return make_trajectory(action, robot_base, default_period(action), arm);
}

Trajectory make_trajectory(ActionClass action, Vec3 robot_base, double period_s, const ArmGeometry& arm) {
  if (!(period_s > 0.0)) fail(ErrorCode::InvalidArgument, "trajectory period must be positive");
  return Trajectory{action, period_s, robot_base, arm};
}

std::vector<Scatterer> trajectory_at(const Trajectory& tr, double t) {
  if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "trajectory time must be >= 0");
  const ArmGeometry& a = tr.arm;
  const double phase = 2.0 * std::numbers::pi * (std::fmod(t, tr.period_s) / tr.period_s);

  Vec3 tool = tool_at_angle(tr, a.facing_rad);
  Vec3 mid = mid_link_for(tr, tool);
  switch (tr.action) {
    case ActionClass::Silence:
      break;
    case ActionClass::Arc:
      // Base-joint sweep: the whole arm swings through a horizontal arc.
      tool = tool_at_angle(tr, a.facing_rad + a.arc_half_angle_rad * std::sin(phase));
      mid = mid_link_for(tr, tool);
      break;
    case ActionClass::Circle:
      // End effector traces a circle in the XY plane around its rest point.
      tool = tool + Vec3{a.circle_radius * std::cos(phase), a.circle_radius * std::sin(phase), 0.0};
      mid = mid_link_for(tr, tool);
      break;
    case ActionClass::Elbow:
      // End effector held; only the intermediate joint moves.
      mid = mid + Vec3{0.0, 0.0, a.elbow_swing * std::sin(phase)};
      break;
  }
  return {{tool, a.end_effector_reflectivity}, {mid, a.mid_link_reflectivity}};
}

}  // namespace csiarm::synth
