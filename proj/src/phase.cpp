#include "mea/phase.hpp"

#include <algorithm>

#include "mea/errors.hpp"
#include "mea/sim.hpp"

namespace mea {

std::vector<double> gripper_heights(const Episode& episode, double delta_xyz) {
  if (!episode.initial_state) {
    throw ValidationError("episode carries no initial state; the start height is unknown");
  }
  const int h = episode.horizon();
  std::vector<double> heights(h + 1);
  heights[0] = episode.initial_state->gripper.position.z();
  for (int t = 1; t <= h; ++t) {
    const Action a = clip_action(episode.transitions[t - 1].action);
    heights[t] = heights[t - 1] + a.xyz.z() * delta_xyz;
  }
  return heights;
}

int segment_by_height(const Episode& episode, double l_z, double delta_xyz, int margin) {
  if (margin < 0) throw ValidationError("phase margin must be non-negative");
  const std::vector<double> heights = gripper_heights(episode, delta_xyz);
  const int h = episode.horizon();
  for (int t = 0; t <= h; ++t) {
    if (heights[t] < l_z) return std::max(0, t - margin);
  }
  return h;
}

int segment_by_timestep(int horizon, int h_p) {
  if (h_p <= 0 || h_p > horizon) {
    throw ValidationError("h_p=" + std::to_string(h_p) + " outside (0, H=" +
                          std::to_string(horizon) + "]");
  }
  return horizon - h_p;
}

PhaseLabel label_of(int t, int horizon, int h_p) {
  if (t < 0 || t > horizon) throw ValidationError("timestep outside [0, H]");
  if (t == horizon) return PhaseLabel::kTermination;
  return t < h_p ? PhaseLabel::kNonTrivial : PhaseLabel::kTrivial;
}

}  // namespace mea
