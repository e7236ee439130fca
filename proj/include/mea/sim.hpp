#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mea/env_config.hpp"
#include "mea/rng.hpp"
#include "mea/trajectory.hpp"

namespace mea {

/// Full (hidden) world state. Poses are world-frame; observations derived
/// from it are gripper-centric.
struct SimState {
  BodyPose gripper;
  double jaw = 1.0;
  std::vector<BodyPose> objects;
  std::vector<bool> movable;  // hidden from controllers
  std::optional<int> grasped;
  int step_count = 0;
  bool terminal = false;

  SceneSnapshot snapshot() const;
};

struct StepResult {
  SimState state;
  Observation observation;
  double reward = 0.0;
  bool terminal = false;
};

/// Per-timestep replay discrepancy.
struct StepCheck {
  double obs_discrepancy = 0.0;  // max point distance over all segments
  double jaw_discrepancy = 0.0;
  bool reward_match = true;
  bool terminal_match = true;
};

struct FeasibilityReport {
  bool feasible = false;
  double initial_obs_discrepancy = 0.0;  // observe(s0) against the stored o_0
  double initial_jaw_discrepancy = 0.0;
  double max_obs_discrepancy = 0.0;
  double max_jaw_discrepancy = 0.0;
  bool rewards_match = true;
  bool terminals_match = true;
  /// Index of the first action whose replay diverged; -1 when the initial
  /// observation itself mismatches.
  std::optional<int> first_mismatch_step;
  std::vector<StepCheck> steps;  // one entry per executed action
};

/// Deterministic gripper-centric kinematic pick environment.
///
/// Above the interaction height L_z (and with nothing grasped) transitions
/// are pure kinematics: the gripper translates by a_xyz * delta_xyz, its yaw
/// advances by a_theta * delta_theta, and the jaw goes to a_jaw. Below L_z a
/// contact model applies: closing the jaw grasps the nearest movable object
/// within capture_radius of the gripper point, a grasped object moves
/// rigidly with the gripper, and immovable objects never move. Reward is 1
/// exactly when a grasped movable object rises above lift_height.
class KinSim {
 public:
  explicit KinSim(EnvConfig config);

  const EnvConfig& config() const { return config_; }

  /// Samples an initial state: objects uniform over the workspace floor,
  /// yaws uniform over [0, 2*pi), gripper above L_z with the jaw open.
  /// Deterministic given the seed.
  std::pair<SimState, Observation> reset(std::uint64_t seed) const;

  /// Deterministic next state in the no-interaction regime. Throws
  /// ValidationError when called on an interacting state (gripper below L_z
  /// or something grasped).
  SimState predict_next_state(const SimState& state, const Action& action) const;

  /// Throws ValidationError when stepping a terminal state.
  StepResult step(const SimState& state, const Action& action) const;

  Observation observe(const SimState& state) const;

  SimState state_from_snapshot(const SceneSnapshot& snapshot) const;

  /// Whether a snapshot lies in the support of the reset distribution.
  bool in_reset_support(const SceneSnapshot& snapshot) const;

  /// Replays the episode's actions from s0 and compares observations,
  /// rewards, and terminal flags against the stored transitions.
  FeasibilityReport replay_check(const Episode& episode, const SimState& s0,
                                 double tolerance = kReplayTol) const;

  const std::vector<Vec3>& gripper_template() const { return gripper_template_; }
  const std::vector<Vec3>& object_template() const { return object_template_; }

 private:
  bool interacting(const SimState& state) const;
  SimState apply_kinematics(const SimState& state, const Action& action) const;

  EnvConfig config_;
  std::vector<Vec3> gripper_template_;  // zero-centroid, gripper-local frame
  std::vector<Vec3> object_template_;   // object-local frame, centered on the pose
};

/// One successful scripted pick: approach over the movable object, descend
/// below L_z, close the jaw, lift. Uses continuous or discrete commands per
/// the environment's action space.
Episode scripted_demo(const KinSim& sim, std::uint64_t seed);

/// Clips every action component into [-1, 1].
Action clip_action(const Action& action);

}  // namespace mea
