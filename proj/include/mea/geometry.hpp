#pragma once

#include <Eigen/Core>

#include <optional>
#include <variant>
#include <vector>

namespace mea {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Default tolerance for algebraic identities (composition, inversion,
/// round-trips through rotation matrices).
inline constexpr double kAlgebraTol = 1e-12;

/// Default tolerance for simulator replay comparisons.
inline constexpr double kReplayTol = 1e-9;

/// SO(2) group element: a rotation about the reference-frame z-axis.
/// Stored as raw radians; sums of angles stay exact and canonicalization
/// into [0, 2*pi) is a separate, explicit operation.
struct RotationAngle {
  double radians = 0.0;
};

/// Translation group element of R^3, meters.
struct Translation3 {
  Vec3 offset = Vec3::Zero();
};

/// Maps an angle into [0, 2*pi).
double canonical_angle(double radians);

/// Trivial representation: identity on any value.
template <typename T>
const T& apply_trivial(const T& x) {
  return x;
}

/// Translational standard representation: x + g.
Vec3 apply_translation(const Translation3& g, const Vec3& x);

/// Rotational standard representation on a scalar: x + theta.
double apply_rotation(const RotationAngle& g, double x);

/// Rotational standard representation on a 3-vector: rotation about the
/// z-axis. The z-component passes through untouched.
Vec3 apply_rotation(const RotationAngle& g, const Vec3& v);

/// Rotates every point of a cloud about the frame origin.
std::vector<Vec3> apply_rotation(const RotationAngle& g, const std::vector<Vec3>& points);

/// Translates every point of a cloud.
std::vector<Vec3> apply_translation(const Translation3& g, const std::vector<Vec3>& points);

RotationAngle compose(const RotationAngle& a, const RotationAngle& b);
Translation3 compose(const Translation3& a, const Translation3& b);
RotationAngle invert(const RotationAngle& g);
Translation3 invert(const Translation3& g);

/// Type-erased group element for call sites that mix representation kinds.
using GroupValue = std::variant<RotationAngle, Translation3>;

/// Composes two elements of the same kind.
/// Throws ValidationError when the kinds differ.
GroupValue compose(const GroupValue& a, const GroupValue& b);
GroupValue invert(const GroupValue& g);

/// Per-timestep augmentation parameters. Either the continuous quadruple
/// (delta_r, delta_z, delta_rot, delta_theta) or a discrete quarter-turn
/// index is active, never both.
struct GroupElement {
  double delta_r = 1.0;
  double delta_z = 1.0;
  double delta_rot = 0.0;    // radians
  double delta_theta = 0.0;  // rotation-action noise scale
  std::optional<int> discrete_c4;  // index into {0, pi/2, pi, 3*pi/2}

  static GroupElement trivial() { return {}; }

  static GroupElement continuous(double r, double z, double rot, double theta) {
    GroupElement g;
    g.delta_r = r;
    g.delta_z = z;
    g.delta_rot = rot;
    g.delta_theta = theta;
    return g;
  }

  static GroupElement c4(int quarter_turns);

  /// True when applying the element cannot change any action.
  bool is_trivial() const {
    if (discrete_c4) return *discrete_c4 == 0;
    return delta_r == 1.0 && delta_z == 1.0 && delta_rot == 0.0 && delta_theta == 0.0;
  }
};

}  // namespace mea
