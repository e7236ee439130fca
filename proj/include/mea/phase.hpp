#pragma once

#include <vector>

#include "mea/env_config.hpp"
#include "mea/trajectory.hpp"

namespace mea {

enum class PhaseLabel { kNonTrivial, kTrivial, kTermination };

/// Gripper-height criterion: heights are the initial gripper height plus the
/// cumulative z-action displacement; H_p is the first timestep whose height
/// drops below l_z, less a conservative margin (clamped at 0). If the height
/// never drops, H_p = H.
///
/// Requires the episode to carry its initial state (for the start height).
int segment_by_height(const Episode& episode, double l_z, double delta_xyz, int margin = 0);

/// Timestep criterion: H_p = H - h_p for a predefined constant
/// h_p in (0, H].
int segment_by_timestep(int horizon, int h_p);

/// Label of timestep t within an episode of horizon h and boundary h_p:
/// non-trivial on [0, H_p), trivial on [H_p, H), termination at H.
PhaseLabel label_of(int t, int horizon, int h_p);

/// Reconstructed gripper heights at t = 0..H, from the initial height and
/// the stored z-actions.
std::vector<double> gripper_heights(const Episode& episode, double delta_xyz);

}  // namespace mea
