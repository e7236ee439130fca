#include "mea/trajectory.hpp"

#include <cmath>

#include "mea/errors.hpp"

namespace mea {
namespace {

bool in_unit_range(double v) { return std::isfinite(v) && v >= -1.0 && v <= 1.0; }

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

std::string at_t(int t) { return " at t=" + std::to_string(t); }

}  // namespace

Vec3 PointCloud::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : points) sum += p;
  return points.empty() ? sum : Vec3(sum / static_cast<double>(points.size()));
}

std::string to_string(EpisodeOrigin origin) {
  switch (origin) {
    case EpisodeOrigin::kDemonstration: return "demonstration";
    case EpisodeOrigin::kAugmented: return "augmented";
    case EpisodeOrigin::kIsometricAugmented: return "isometric-augmented";
  }
  return "demonstration";
}

EpisodeOrigin origin_from_string(const std::string& s) {
  if (s == "demonstration") return EpisodeOrigin::kDemonstration;
  if (s == "augmented") return EpisodeOrigin::kAugmented;
  if (s == "isometric-augmented") return EpisodeOrigin::kIsometricAugmented;
  throw ValidationError("unknown episode origin: " + s);
}

void validate_episode(const Episode& ep, const ValidationOptions& opts) {
  require(!ep.transitions.empty(), "episode has no transitions");
  const int h = ep.horizon();
  if (opts.h_max >= 0) {
    require(h <= opts.h_max,
            "episode horizon " + std::to_string(h) + " exceeds H_max " + std::to_string(opts.h_max));
  }
  if (ep.phase_boundary) {
    require(*ep.phase_boundary >= 0 && *ep.phase_boundary <= h,
            "phase boundary H_p=" + std::to_string(*ep.phase_boundary) +
                " outside [0, H=" + std::to_string(h) + "]");
  }
  if (ep.group_sequence) {
    require(static_cast<int>(ep.group_sequence->size()) == h + 1,
            "group sequence length " + std::to_string(ep.group_sequence->size()) +
                " does not match H+1=" + std::to_string(h + 1));
  }

  for (int t = 0; t <= h; ++t) {
    const Transition& tr = ep.transitions[t];
    for (int k = 0; k < 3; ++k) {
      require(in_unit_range(tr.action.xyz[k]),
              "action xyz component " + std::to_string(k) + " outside [-1,1]" + at_t(t));
    }
    require(in_unit_range(tr.action.theta), "action theta outside [-1,1]" + at_t(t));
    require(in_unit_range(tr.action.jaw), "action jaw outside [-1,1]" + at_t(t));

    require(tr.reward == 0.0 || tr.reward == 1.0, "reward not in {0,1}" + at_t(t));
    if (t < h) {
      require(tr.reward == 0.0, "nonzero reward before terminal" + at_t(t));
      require(!tr.terminal, "terminal flag set before the last transition" + at_t(t));
    } else {
      require(tr.terminal, "last transition is not terminal" + at_t(t));
    }

    const Observation& obs = tr.observation;
    require(in_unit_range(obs.jaw), "jaw observation outside [-1,1]" + at_t(t));
    if (opts.num_objects >= 0) {
      require(static_cast<int>(obs.object_clouds.size()) == opts.num_objects,
              "object cloud count " + std::to_string(obs.object_clouds.size()) +
                  " does not match M=" + std::to_string(opts.num_objects) + at_t(t));
    }
    if (!opts.allow_empty_clouds) {
      require(!obs.gripper_cloud.empty(), "empty gripper cloud" + at_t(t));
      for (std::size_t i = 0; i < obs.object_clouds.size(); ++i) {
        require(!obs.object_clouds[i].empty(),
                "empty object cloud " + std::to_string(i) + at_t(t));
      }
    }
    for (const Vec3& p : obs.gripper_cloud.points) {
      require(p.allFinite(), "non-finite gripper cloud point" + at_t(t));
    }
    for (const PointCloud& cloud : obs.object_clouds) {
      for (const Vec3& p : cloud.points) {
        require(p.allFinite(), "non-finite object cloud point" + at_t(t));
      }
    }
    if (!obs.gripper_cloud.empty()) {
      require(obs.gripper_cloud.centroid().norm() <= opts.centroid_tol,
              "gripper cloud centroid off origin" + at_t(t));
    }
  }
}

void ReplayBuffer::append(Episode ep) {
  validate_episode(ep, validation_);
  episodes_.push_back(std::move(ep));
  if (capacity_ && episodes_.size() > *capacity_) episodes_.pop_front();
}

}  // namespace mea
