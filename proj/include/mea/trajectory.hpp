#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mea/geometry.hpp"

namespace mea {

/// Normalized gripper command. Every component lies in [-1, 1].
struct Action {
  Vec3 xyz = Vec3::Zero();  // delta translation, units of delta_xyz
  double theta = 0.0;       // delta yaw, units of delta_theta
  double jaw = 0.0;         // target jaw position

  static Action zero() { return {}; }
};

struct PointCloud {
  std::vector<Vec3> points;  // meters, gripper-centric frame

  bool empty() const { return points.empty(); }
  Vec3 centroid() const;
};

/// o_t: per-object point cloud segments, the gripper segment, and the jaw
/// scalar, all expressed in the gripper-centric frame (origin at the gripper
/// cloud centroid, axes world-aligned).
struct Observation {
  std::vector<PointCloud> object_clouds;
  PointCloud gripper_cloud;
  double jaw = 0.0;
};

struct Transition {
  Action action;
  double reward = 0.0;  // sparse binary: 0 or 1
  Observation observation;
  bool terminal = false;
};

enum class EpisodeOrigin { kDemonstration, kAugmented, kIsometricAugmented };

std::string to_string(EpisodeOrigin origin);
EpisodeOrigin origin_from_string(const std::string& s);

/// World pose of a rigid body: position plus yaw about the world z-axis.
struct BodyPose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

/// Snapshot of the world at episode start, sufficient to reconstruct the
/// simulator state the episode was (or claims to have been) rolled from.
struct SceneSnapshot {
  BodyPose gripper;
  double jaw = 0.0;
  std::vector<BodyPose> objects;
  std::vector<bool> movable;
};

/// A rollout of H+1 transitions indexed t = 0..H. Entry t carries the
/// observation at state s_t, the action taken from s_t (zero at t = H, where
/// no action is executed), the reward received on arrival in s_t, and the
/// terminal flag of s_t.
struct Episode {
  std::vector<Transition> transitions;
  std::optional<int> phase_boundary;  // H_p
  EpisodeOrigin origin = EpisodeOrigin::kDemonstration;
  std::optional<SceneSnapshot> initial_state;
  std::optional<std::vector<GroupElement>> group_sequence;
  std::optional<double> isometric_angle;
  std::optional<int> source_episode;  // index of the demonstration this was augmented from

  int horizon() const { return static_cast<int>(transitions.size()) - 1; }
};

struct ValidationOptions {
  int num_objects = -1;          // expected M; -1 skips the check
  int h_max = -1;                // -1 skips the check
  bool allow_empty_clouds = false;
  double centroid_tol = 1e-9;
};

/// Checks every Episode invariant. Throws ValidationError naming the failing
/// field and timestep.
void validate_episode(const Episode& ep, const ValidationOptions& opts = {});

/// Episode container with FIFO eviction once size exceeds capacity.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::optional<std::size_t> capacity = std::nullopt,
                        ValidationOptions validation = {})
      : capacity_(capacity), validation_(validation) {}

  /// Validates and appends; evicts the oldest episode when over capacity.
  void append(Episode ep);

  std::size_t size() const { return episodes_.size(); }
  const Episode& at(std::size_t i) const { return episodes_.at(i); }
  const std::deque<Episode>& episodes() const { return episodes_; }

 private:
  std::optional<std::size_t> capacity_;
  ValidationOptions validation_;
  std::deque<Episode> episodes_;
};

}  // namespace mea
