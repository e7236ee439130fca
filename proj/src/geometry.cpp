#include "mea/geometry.hpp"

#include <cmath>

#include "mea/errors.hpp"

namespace mea {

double canonical_angle(double radians) {
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod of a tiny negative angle can land exactly on 2*pi after the shift.
  if (a >= kTwoPi) a = 0.0;
  return a;
}

Vec3 apply_translation(const Translation3& g, const Vec3& x) { return x + g.offset; }

double apply_rotation(const RotationAngle& g, double x) { return x + g.radians; }

Vec3 apply_rotation(const RotationAngle& g, const Vec3& v) {
  const double c = std::cos(g.radians);
  const double s = std::sin(g.radians);
  return Vec3(c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z());
}

std::vector<Vec3> apply_rotation(const RotationAngle& g, const std::vector<Vec3>& points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  const double c = std::cos(g.radians);
  const double s = std::sin(g.radians);
  for (const Vec3& p : points) {
    out.emplace_back(c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z());
  }
  return out;
}

std::vector<Vec3> apply_translation(const Translation3& g, const std::vector<Vec3>& points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.emplace_back(p + g.offset);
  return out;
}

RotationAngle compose(const RotationAngle& a, const RotationAngle& b) {
  return {a.radians + b.radians};
}

Translation3 compose(const Translation3& a, const Translation3& b) {
  return {a.offset + b.offset};
}

RotationAngle invert(const RotationAngle& g) { return {-g.radians}; }

Translation3 invert(const Translation3& g) { return {-g.offset}; }

GroupValue compose(const GroupValue& a, const GroupValue& b) {
  if (a.index() != b.index()) {
    throw ValidationError("incompatible group elements: cannot compose a rotation with a translation");
  }
  if (std::holds_alternative<RotationAngle>(a)) {
    return compose(std::get<RotationAngle>(a), std::get<RotationAngle>(b));
  }
  return compose(std::get<Translation3>(a), std::get<Translation3>(b));
}

GroupValue invert(const GroupValue& g) {
  if (std::holds_alternative<RotationAngle>(g)) return invert(std::get<RotationAngle>(g));
  return invert(std::get<Translation3>(g));
}

GroupElement GroupElement::c4(int quarter_turns) {
  if (quarter_turns < 0 || quarter_turns > 3) {
    throw ValidationError("C4 index must be in {0,1,2,3}, got " + std::to_string(quarter_turns));
  }
  GroupElement g;
  g.discrete_c4 = quarter_turns;
  g.delta_rot = 0.5 * kPi * quarter_turns;
  return g;
}

}  // namespace mea
