#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mea/env_config.hpp"
#include "mea/geometry.hpp"
#include "mea/rng.hpp"
#include "mea/sim.hpp"
#include "mea/trajectory.hpp"

namespace mea {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct IsometricOverlayConfig {
  enum class Group { kSO2, kC4 };
  Group group = Group::kSO2;
  int copies = 4;
};

/// Sampling policy for the per-timestep group elements and the structured
/// augmented actions built from them.
struct AugmentationPolicy {
  enum class Mode { kContinuous, kDiscrete };

  /// How the radial scaling enters the translation action. The
  /// direction-preserving form scales the xy projection by delta_r and the
  /// z component by delta_z. The literal element-wise form multiplies each
  /// xy component by itself over the radius, which destroys the sign of the
  /// radial direction; it is kept selectable for fidelity experiments.
  enum class RadialMode { kDirectionPreserving, kLiteralElementwise };

  Mode mode = Mode::kContinuous;
  Interval delta_r_range{0.75, 1.0};
  Interval delta_z_range{0.75, 1.0};
  Interval delta_rot_range{0.0, kTwoPi};
  Interval delta_theta_range{0.0, 0.3};
  double discrete_trivial_prob = 0.7;
  RadialMode radial_mode = RadialMode::kDirectionPreserving;
  int augmentations_per_demo = 6;
  std::optional<IsometricOverlayConfig> isometric_overlay;
  int max_resample_retries = 100;

  static AugmentationPolicy defaults_for(Mode mode);
  void validate() const;
};

using GroupSequence = std::vector<GroupElement>;

/// Draws one group element per timestep t = 0..H, mutually independent.
/// Elements at t >= h_p are trivial. Continuous mode draws the quadruple
/// uniformly from the policy ranges; discrete mode draws the identity with
/// discrete_trivial_prob and otherwise a uniform non-identity quarter turn.
GroupSequence sample_group_sequence(const AugmentationPolicy& policy, int horizon, int h_p,
                                    Rng& rng);

/// Structured continuous action: scale radially and in z, rotate the result
/// about the z-axis, and perturb the rotation action with uniform noise
/// scaled by delta_theta. The jaw component passes through; outputs are
/// clipped to [-1, 1].
Action augment_action_continuous(const Action& action, const GroupElement& g,
                                 const AugmentationPolicy& policy, Rng& rng);

/// Quarter-turn action for the 9-command discrete set: +-x / +-y commands
/// rotate into one another (exactly, via index permutation); z, rotation and
/// jaw commands pass through. Throws when the action is not a member of the
/// discrete set.
Action augment_action_discrete(const Action& action, const GroupElement& g);

/// Deterministic augmentation core. Given realized augmented actions for
/// t in [0, h_p), rewrites the non-trivial phase: actions replaced,
/// object clouds translated by -delta_xyz * suffix-sum(a - a_bar), the
/// gripper cloud rotated by delta_theta * suffix-sum(a_theta - a_bar_theta),
/// jaw/rewards/terminals copied verbatim. Transitions at t >= h_p are copied
/// unchanged. The stored initial state is shifted consistently.
Episode build_augmented_episode(const Episode& episode, int h_p,
                                const std::vector<Action>& augmented_actions,
                                const EnvConfig& env);

/// Analytic feasibility filter. Returns a rejection reason when the replayed
/// gripper height would dip below L_z inside the non-trivial phase or the
/// reconstructed initial state leaves the reset support; nullopt when the
/// candidate is acceptable.
std::optional<std::string> feasibility_violation(const Episode& episode, int h_p,
                                                 const std::vector<Action>& augmented_actions,
                                                 const EnvConfig& env);

/// Samples group sequences and augmented actions until the feasibility
/// filter accepts, then builds the augmented episode (origin tag
/// "augmented", group sequence recorded). Throws ValidationError carrying
/// the last rejection reason when retries are exhausted.
Episode augment_episode(const Episode& episode, int h_p, const AugmentationPolicy& policy,
                        const EnvConfig& env, Rng& rng);

/// Whole-episode isometric rotation: every observation cloud and every
/// action's xyz component rotated by the same angle about the frame z-axis;
/// rotation actions, jaw, rewards and terminals untouched. Exact quarter
/// turns use the integer permutation so discrete command sets stay closed.
/// Assumes xy action components with Euclidean norm <= 1 (which demos and
/// MEA outputs satisfy), so no re-clipping is needed.
Episode apply_isometric_overlay(const Episode& episode, const RotationAngle& angle);

/// Outcome of checking the four multi-group invariance conditions for a
/// ground-truth/augmented episode pair, by replaying the augmented actions
/// from the reconstructed initial state.
struct ConditionReport {
  bool transition_consistent = false;    // replayed next-observations + terminals
  bool reward_invariant = false;         // augmented rewards equal ground truth
  bool observation_consistent = false;   // observe() agrees at every visited state
  bool initial_state_in_support = false; // within workspace, start height >= L_z
  double max_observation_discrepancy = 0.0;
  std::optional<int> first_mismatch_step;

  bool all() const {
    return transition_consistent && reward_invariant && observation_consistent &&
           initial_state_in_support;
  }
};

ConditionReport verify_multigroup_conditions(const Episode& ground_truth, const Episode& augmented,
                                             const KinSim& sim, const SimState& s0_gt,
                                             const SimState& s0_aug,
                                             double tolerance = kReplayTol);

}  // namespace mea
