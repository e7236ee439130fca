#pragma once

#include "mea/geometry.hpp"

namespace mea {

/// Axis-aligned box, used for the workspace validity region.
struct Aabb {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  bool contains_xy(const Vec3& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
};

enum class ActionSpace { kContinuous, kDiscrete };

/// Environment parameters of the desk-scale pick task.
///
/// The workspace is a validity region, not a set of walls: reset samples
/// poses inside it and the augmentation filter rejects initial states
/// outside it, but step() never clamps positions.
struct EnvConfig {
  double delta_xyz = 0.01;    // meters of translation per unit action
  double delta_theta = 0.05;  // radians of yaw per unit action
  int h_max = 50;
  double l_z = 0.10;          // interaction height threshold, meters
  Aabb workspace{Vec3(-0.08, -0.08, 0.0), Vec3(0.08, 0.08, 0.40)};
  int num_objects = 1;        // M
  double capture_radius = 0.025;
  double lift_height = 0.10;
  int points_per_segment = 64;
  double object_width = 0.05;   // cuboid xy edge
  double object_height = 0.05;  // cuboid z edge
  double spawn_z_min = 0.12;    // gripper start height range
  double spawn_z_max = 0.18;
  ActionSpace action_space = ActionSpace::kContinuous;

  /// Jaw thresholds of the grasp latch: a grasp engages when the jaw crosses
  /// below jaw_close, releases when it crosses above jaw_open, and holds for
  /// values in between.
  ///
  /// The continuous action space maps the jaw command directly onto the jaw
  /// position. The discrete space actuates the jaw only through the toggle
  /// command (|jaw| > 0.5); movement one-hots leave the jaw where it is, so
  /// a closed gripper stays visibly closed while carrying an object.
  double jaw_close = -0.5;
  double jaw_open = 0.5;

  /// Discrete-task defaults: same environment, one-hot commands, and the
  /// longer horizon the per-axis motions need.
  static EnvConfig discrete_defaults() {
    EnvConfig cfg;
    cfg.action_space = ActionSpace::kDiscrete;
    cfg.h_max = 80;
    return cfg;
  }

  void validate() const;
};

}  // namespace mea
