#include "mea/augment.hpp"

#include <algorithm>
#include <cmath>

#include "mea/errors.hpp"
#include "mea/log.hpp"
#include "mea/phase.hpp"

namespace mea {
namespace {

constexpr double kRadialEpsilon = 1e-12;

void check_interval(const Interval& iv, double lo, double hi, const char* name) {
  if (!(iv.lo <= iv.hi) || iv.lo < lo || iv.hi > hi) {
    throw ValidationError(std::string("AugmentationPolicy.") + name + " outside its documented bounds");
  }
}

/// Exact quarter-turn of the xy components: (x, y) -> (-y, x), k times.
Vec3 quarter_turn(const Vec3& v, int k) {
  Vec3 out = v;
  for (int i = 0; i < k; ++i) out = Vec3(-out.y(), out.x(), out.z());
  return out;
}

/// Detects angles that are exact multiples of pi/2 as produced by the C4
/// samplers, so discrete commands can be rotated without rounding.
std::optional<int> exact_quarter_turns(double radians) {
  const double canonical = canonical_angle(radians);
  for (int k = 0; k < 4; ++k) {
    if (canonical == 0.5 * kPi * k) return k;
  }
  return std::nullopt;
}

bool is_one_hot(const Action& a, int axis, double sign) {
  Action expected;
  if (axis < 3) {
    expected.xyz[axis] = sign;
  } else if (axis == 3) {
    expected.theta = sign;
  } else {
    expected.jaw = sign;
  }
  return a.xyz == expected.xyz && a.theta == expected.theta && a.jaw == expected.jaw;
}

bool in_discrete_action_set(const Action& a) {
  for (int axis = 0; axis < 5; ++axis) {
    if (is_one_hot(a, axis, 1.0) || is_one_hot(a, axis, -1.0)) return true;
  }
  return false;
}

}  // namespace

AugmentationPolicy AugmentationPolicy::defaults_for(Mode mode) {
  AugmentationPolicy policy;
  policy.mode = mode;
  if (mode == Mode::kDiscrete) {
    policy.augmentations_per_demo = 200;
    policy.isometric_overlay.reset();
  }
  return policy;
}

void AugmentationPolicy::validate() const {
  check_interval(delta_r_range, 0.0, 1.0, "delta_r_range");
  check_interval(delta_z_range, 0.0, 1.0, "delta_z_range");
  check_interval(delta_rot_range, 0.0, kTwoPi, "delta_rot_range");
  check_interval(delta_theta_range, 0.0, 2.0, "delta_theta_range");
  if (discrete_trivial_prob < 0.0 || discrete_trivial_prob > 1.0) {
    throw ValidationError("AugmentationPolicy.discrete_trivial_prob outside [0,1]");
  }
  if (augmentations_per_demo < 0) {
    throw ValidationError("AugmentationPolicy.augmentations_per_demo negative");
  }
  if (max_resample_retries < 1) {
    throw ValidationError("AugmentationPolicy.max_resample_retries must be at least 1");
  }
  if (isometric_overlay && isometric_overlay->copies < 1) {
    throw ValidationError("AugmentationPolicy.isometric_overlay.copies must be at least 1");
  }
}

GroupSequence sample_group_sequence(const AugmentationPolicy& policy, int horizon, int h_p,
                                    Rng& rng) {
  if (h_p < 0 || h_p > horizon) {
    throw ValidationError("H_p=" + std::to_string(h_p) + " outside [0, H=" +
                          std::to_string(horizon) + "]");
  }
  GroupSequence seq;
  seq.reserve(horizon + 1);
  for (int t = 0; t <= horizon; ++t) {
    if (t >= h_p) {
      seq.push_back(GroupElement::trivial());
    } else if (policy.mode == AugmentationPolicy::Mode::kContinuous) {
      seq.push_back(GroupElement::continuous(
          rng.uniform(policy.delta_r_range.lo, policy.delta_r_range.hi),
          rng.uniform(policy.delta_z_range.lo, policy.delta_z_range.hi),
          rng.uniform(policy.delta_rot_range.lo, policy.delta_rot_range.hi),
          rng.uniform(policy.delta_theta_range.lo, policy.delta_theta_range.hi)));
    } else if (rng.bernoulli(policy.discrete_trivial_prob)) {
      seq.push_back(GroupElement::c4(0));
    } else {
      seq.push_back(GroupElement::c4(1 + static_cast<int>(rng.uniform_index(3))));
    }
  }
  return seq;
}

Action augment_action_continuous(const Action& action, const GroupElement& g,
                                 const AugmentationPolicy& policy, Rng& rng) {
  if (g.discrete_c4) {
    throw ValidationError("continuous action augmentation requires a continuous group element");
  }
  Vec3 k(g.delta_r, g.delta_r, g.delta_z);
  if (policy.radial_mode == AugmentationPolicy::RadialMode::kLiteralElementwise) {
    const double radius = std::hypot(action.xyz.x(), action.xyz.y());
    if (radius < kRadialEpsilon) {
      k.x() = 0.0;
      k.y() = 0.0;
    } else {
      k.x() = action.xyz.x() / radius * g.delta_r;
      k.y() = action.xyz.y() / radius * g.delta_r;
    }
  }

  Action out = action;
  out.xyz = apply_rotation(RotationAngle{g.delta_rot}, Vec3(k.cwiseProduct(action.xyz)));
  const double noise = rng.uniform(-1.0, 1.0);
  out.theta = action.theta + g.delta_theta * noise;
  return clip_action(out);
}

Action augment_action_discrete(const Action& action, const GroupElement& g) {
  if (!g.discrete_c4) {
    throw ValidationError("discrete action augmentation requires a C4 group element");
  }
  if (!in_discrete_action_set(action)) {
    throw ValidationError("action is not a member of the discrete action set");
  }
  Action out = action;
  out.xyz = quarter_turn(action.xyz, *g.discrete_c4);
  return out;
}

namespace {

/// Suffix sums S(t) = sum_{j=t}^{h_p-1} (a_j - a_bar_j) of the translation
/// and rotation action differences, S(h_p) = 0.
struct SuffixSums {
  std::vector<Vec3> xyz;     // length h_p + 1
  std::vector<double> theta;
};

SuffixSums action_difference_sums(const Episode& episode, int h_p,
                                  const std::vector<Action>& augmented) {
  SuffixSums sums;
  sums.xyz.assign(h_p + 1, Vec3::Zero());
  sums.theta.assign(h_p + 1, 0.0);
  for (int t = h_p - 1; t >= 0; --t) {
    const Action& a = episode.transitions[t].action;
    sums.xyz[t] = sums.xyz[t + 1] + (a.xyz - augmented[t].xyz);
    sums.theta[t] = sums.theta[t + 1] + (a.theta - augmented[t].theta);
  }
  return sums;
}

}  // namespace

Episode build_augmented_episode(const Episode& episode, int h_p,
                                const std::vector<Action>& augmented_actions,
                                const EnvConfig& env) {
  const int h = episode.horizon();
  if (h_p < 0 || h_p > h) {
    throw ValidationError("H_p=" + std::to_string(h_p) + " outside [0, H=" +
                          std::to_string(h) + "]");
  }
  if (static_cast<int>(augmented_actions.size()) != h_p) {
    throw ValidationError("augmented action count does not match the non-trivial phase length");
  }

  const SuffixSums sums = action_difference_sums(episode, h_p, augmented_actions);

  Episode out = episode;
  out.origin = EpisodeOrigin::kAugmented;
  out.phase_boundary = h_p;
  out.group_sequence.reset();
  out.isometric_angle.reset();

  for (int t = 0; t < h_p; ++t) {
    Transition& tr = out.transitions[t];
    tr.action = augmented_actions[t];

    const Translation3 shift{-env.delta_xyz * sums.xyz[t]};
    for (PointCloud& cloud : tr.observation.object_clouds) {
      cloud.points = apply_translation(shift, cloud.points);
    }
    const RotationAngle spin{env.delta_theta * sums.theta[t]};
    tr.observation.gripper_cloud.points = apply_rotation(spin, tr.observation.gripper_cloud.points);
  }

  if (out.initial_state) {
    out.initial_state->gripper.position += env.delta_xyz * sums.xyz[0];
    out.initial_state->gripper.yaw += env.delta_theta * sums.theta[0];
  }
  return out;
}

namespace {

bool snapshot_in_reset_support(const SceneSnapshot& snap, const EnvConfig& env) {
  const Vec3& g = snap.gripper.position;
  if (!env.workspace.contains_xy(g)) return false;
  if (g.z() < env.spawn_z_min || g.z() > env.spawn_z_max) return false;
  for (const BodyPose& obj : snap.objects) {
    if (!env.workspace.contains_xy(obj.position)) return false;
  }
  return true;
}

}  // namespace

std::optional<std::string> feasibility_violation(const Episode& episode, int h_p,
                                                 const std::vector<Action>& augmented_actions,
                                                 const EnvConfig& env) {
  if (!episode.initial_state) {
    throw ValidationError("episode carries no initial state; feasibility cannot be checked");
  }
  const SuffixSums sums = action_difference_sums(episode, h_p, augmented_actions);
  const std::vector<double> heights = gripper_heights(episode, env.delta_xyz);

  for (int t = 0; t < h_p; ++t) {
    const double replayed = heights[t] + env.delta_xyz * sums.xyz[t].z();
    if (replayed < env.l_z) {
      return "replayed gripper height " + std::to_string(replayed) +
             " dips below L_z inside the non-trivial phase at t=" + std::to_string(t);
    }
  }

  SceneSnapshot start = *episode.initial_state;
  start.gripper.position += env.delta_xyz * sums.xyz[0];
  start.gripper.yaw += env.delta_theta * sums.theta[0];
  if (!snapshot_in_reset_support(start, env)) {
    return "reconstructed initial state leaves the reset support";
  }
  return std::nullopt;
}

Episode augment_episode(const Episode& episode, int h_p, const AugmentationPolicy& policy,
                        const EnvConfig& env, Rng& rng) {
  policy.validate();
  const int h = episode.horizon();
  if (h_p < 0 || h_p > h) {
    throw ValidationError("H_p=" + std::to_string(h_p) + " outside [0, H=" +
                          std::to_string(h) + "]");
  }

  std::string last_reason = "no candidate sampled";
  for (int attempt = 0; attempt < policy.max_resample_retries; ++attempt) {
    GroupSequence seq = sample_group_sequence(policy, h, h_p, rng);
    std::vector<Action> augmented;
    augmented.reserve(h_p);
    for (int t = 0; t < h_p; ++t) {
      const Action& a = episode.transitions[t].action;
      augmented.push_back(policy.mode == AugmentationPolicy::Mode::kContinuous
                              ? augment_action_continuous(a, seq[t], policy, rng)
                              : augment_action_discrete(a, seq[t]));
    }
    if (auto reason = feasibility_violation(episode, h_p, augmented, env)) {
      last_reason = *reason;
      log(LogLevel::kDebug, "augmentation attempt %d rejected: %s", attempt, reason->c_str());
      continue;
    }
    Episode out = build_augmented_episode(episode, h_p, augmented, env);
    out.group_sequence = std::move(seq);
    return out;
  }
  throw ValidationError("augmentation rejected after " +
                        std::to_string(policy.max_resample_retries) +
                        " retries; last reason: " + last_reason);
}

Episode apply_isometric_overlay(const Episode& episode, const RotationAngle& angle) {
  const std::optional<int> quarters = exact_quarter_turns(angle.radians);

  Episode out = episode;
  out.origin = EpisodeOrigin::kIsometricAugmented;
  out.isometric_angle = episode.isometric_angle ? *episode.isometric_angle + angle.radians
                                                : angle.radians;

  for (Transition& tr : out.transitions) {
    tr.action.xyz = quarters ? quarter_turn(tr.action.xyz, *quarters)
                             : apply_rotation(angle, tr.action.xyz);
    tr.observation.gripper_cloud.points = apply_rotation(angle, tr.observation.gripper_cloud.points);
    for (PointCloud& cloud : tr.observation.object_clouds) {
      cloud.points = apply_rotation(angle, cloud.points);
    }
  }

  if (out.initial_state) {
    SceneSnapshot& snap = *out.initial_state;
    snap.gripper.position = apply_rotation(angle, snap.gripper.position);
    snap.gripper.yaw += angle.radians;
    for (BodyPose& obj : snap.objects) {
      obj.position = apply_rotation(angle, obj.position);
      obj.yaw += angle.radians;
    }
  }
  return out;
}

ConditionReport verify_multigroup_conditions(const Episode& ground_truth, const Episode& augmented,
                                             const KinSim& sim, const SimState& s0_gt,
                                             const SimState& s0_aug, double tolerance) {
  if (ground_truth.horizon() != augmented.horizon()) {
    throw ValidationError("ground-truth and augmented episodes differ in length");
  }
  (void)s0_gt;  // the ground-truth start participates via the episode's stored rewards

  ConditionReport report;

  report.reward_invariant = true;
  for (int t = 0; t <= ground_truth.horizon(); ++t) {
    if (augmented.transitions[t].reward != ground_truth.transitions[t].reward) {
      report.reward_invariant = false;
      break;
    }
  }

  const FeasibilityReport replay = sim.replay_check(augmented, s0_aug, tolerance);
  bool arrivals_ok = true;
  for (std::size_t k = 0; k < replay.steps.size(); ++k) {
    const StepCheck& check = replay.steps[k];
    const bool ok =
        check.obs_discrepancy <= tolerance && check.terminal_match && check.reward_match;
    if (!ok && !report.first_mismatch_step) report.first_mismatch_step = static_cast<int>(k);
    arrivals_ok = arrivals_ok && ok;
  }
  report.transition_consistent =
      arrivals_ok && static_cast<int>(replay.steps.size()) == augmented.horizon();
  report.observation_consistent = replay.initial_obs_discrepancy <= tolerance &&
                                  replay.initial_jaw_discrepancy <= tolerance &&
                                  replay.max_jaw_discrepancy <= tolerance;
  report.max_observation_discrepancy = replay.max_obs_discrepancy;

  const SceneSnapshot start = s0_aug.snapshot();
  const Aabb& ws = sim.config().workspace;
  bool in_support = ws.contains(start.gripper.position) &&
                    start.gripper.position.z() >= sim.config().l_z;
  for (const BodyPose& obj : start.objects) {
    in_support = in_support && ws.contains(obj.position);
  }
  report.initial_state_in_support = in_support;
  return report;
}

}  // namespace mea
