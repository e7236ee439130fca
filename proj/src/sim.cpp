#include "mea/sim.hpp"

#include <algorithm>
#include <cmath>

#include "mea/errors.hpp"
#include "mea/log.hpp"

namespace mea {
namespace {

constexpr double kLandingTol = 1e-9;

double clip_unit(double v) { return std::clamp(v, -1.0, 1.0); }

/// Smallest-magnitude residual of angle modulo pi/2, in [-pi/4, pi/4].
double yaw_residual_quarter(double target, double current) {
  return std::remainder(target - current, 0.5 * kPi);
}

}  // namespace

void EnvConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError(std::string("EnvConfig.") + name + " must be positive and finite");
    }
  };
  positive(delta_xyz, "delta_xyz");
  positive(delta_theta, "delta_theta");
  positive(capture_radius, "capture_radius");
  positive(lift_height, "lift_height");
  positive(object_width, "object_width");
  positive(object_height, "object_height");
  if (h_max <= 0) throw ValidationError("EnvConfig.h_max must be positive");
  if (num_objects <= 0) throw ValidationError("EnvConfig.num_objects must be positive");
  if (points_per_segment <= 0) throw ValidationError("EnvConfig.points_per_segment must be positive");
  if (!(workspace.lo.array() < workspace.hi.array()).all()) {
    throw ValidationError("EnvConfig.workspace is degenerate");
  }
  if (!(l_z > workspace.lo.z() + object_height)) {
    throw ValidationError("EnvConfig.l_z must lie strictly above the floor plus the object height");
  }
  if (!(spawn_z_min >= l_z) || !(spawn_z_max > spawn_z_min)) {
    throw ValidationError("EnvConfig spawn height range must satisfy l_z <= spawn_z_min < spawn_z_max");
  }
  if (!(spawn_z_max <= workspace.hi.z())) {
    throw ValidationError("EnvConfig.spawn_z_max exceeds the workspace");
  }
}

SceneSnapshot SimState::snapshot() const {
  SceneSnapshot snap;
  snap.gripper = gripper;
  snap.jaw = jaw;
  snap.objects = objects;
  snap.movable = movable;
  return snap;
}

Action clip_action(const Action& action) {
  Action a;
  a.xyz = Vec3(clip_unit(action.xyz.x()), clip_unit(action.xyz.y()), clip_unit(action.xyz.z()));
  a.theta = clip_unit(action.theta);
  a.jaw = clip_unit(action.jaw);
  return a;
}

namespace {

/// Claw-shaped gripper template sampled along a polyline: two fingers, a
/// palm bar, and a +y nub that breaks the half-turn symmetry so yaw is
/// observable. Recentred to a zero centroid.
std::vector<Vec3> make_gripper_template(int n_points) {
  const double half_gap = 0.015;
  const double finger_len = 0.04;
  struct Segment {
    Vec3 a, b;
  };
  const std::vector<Segment> path = {
      {Vec3(-half_gap, 0.0, 0.0), Vec3(-half_gap, 0.0, finger_len)},
      {Vec3(-half_gap, 0.0, finger_len), Vec3(half_gap, 0.0, finger_len)},
      {Vec3(half_gap, 0.0, finger_len), Vec3(half_gap, 0.0, 0.0)},
      {Vec3(0.0, 0.004, finger_len), Vec3(0.0, 0.02, finger_len)},
  };
  double total = 0.0;
  for (const Segment& s : path) total += (s.b - s.a).norm();

  std::vector<Vec3> points;
  points.reserve(n_points);
  for (int i = 0; i < n_points; ++i) {
    double arc = (i + 0.5) / n_points * total;
    for (const Segment& s : path) {
      const double len = (s.b - s.a).norm();
      if (arc <= len || &s == &path.back()) {
        const double u = std::clamp(arc / len, 0.0, 1.0);
        points.emplace_back(s.a + u * (s.b - s.a));
        break;
      }
      arc -= len;
    }
  }

  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  for (Vec3& p : points) p -= centroid;
  return points;
}

/// Cuboid lattice template centered on the object pose. The default 64-point
/// configuration is a 4x4x4 grid, symmetric under quarter turns.
std::vector<Vec3> make_object_template(int n_points, double width, double height) {
  const int k = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n_points))));
  std::vector<Vec3> points;
  points.reserve(n_points);
  auto coord = [k](int i, double extent) {
    if (k == 1) return 0.0;
    return -0.5 * extent + extent * i / (k - 1);
  };
  for (int z = 0; z < k && static_cast<int>(points.size()) < n_points; ++z) {
    for (int y = 0; y < k && static_cast<int>(points.size()) < n_points; ++y) {
      for (int x = 0; x < k && static_cast<int>(points.size()) < n_points; ++x) {
        points.emplace_back(coord(x, width), coord(y, width), coord(z, height));
      }
    }
  }
  return points;
}

std::vector<Vec3> place_template(const std::vector<Vec3>& tpl, const BodyPose& pose) {
  std::vector<Vec3> out;
  out.reserve(tpl.size());
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  for (const Vec3& p : tpl) {
    out.emplace_back(c * p.x() - s * p.y() + pose.position.x(),
                     s * p.x() + c * p.y() + pose.position.y(), p.z() + pose.position.z());
  }
  return out;
}

}  // namespace

KinSim::KinSim(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  gripper_template_ = make_gripper_template(config_.points_per_segment);
  object_template_ =
      make_object_template(config_.points_per_segment, config_.object_width, config_.object_height);
}

std::pair<SimState, Observation> KinSim::reset(std::uint64_t seed) const {
  Rng rng(seed);
  SimState state;
  const Aabb& ws = config_.workspace;
  const double rest_z = 0.5 * config_.object_height;

  state.objects.resize(config_.num_objects);
  for (int i = 0; i < config_.num_objects; ++i) {
    for (int attempt = 0;; ++attempt) {
      BodyPose pose;
      pose.position = Vec3(rng.uniform(ws.lo.x(), ws.hi.x()), rng.uniform(ws.lo.y(), ws.hi.y()),
                           rest_z);
      pose.yaw = rng.uniform(0.0, kTwoPi);
      bool clear = true;
      for (int j = 0; j < i; ++j) {
        const Vec3 d = pose.position - state.objects[j].position;
        if (std::hypot(d.x(), d.y()) < 1.5 * config_.object_width) clear = false;
      }
      if (clear) {
        state.objects[i] = pose;
        break;
      }
      if (attempt > 1000) throw ValidationError("workspace too small to place objects apart");
    }
  }

  state.movable.assign(config_.num_objects, false);
  const int movable_index =
      config_.num_objects == 1 ? 0 : static_cast<int>(rng.uniform_index(config_.num_objects));
  state.movable[movable_index] = true;

  state.gripper.position = Vec3(rng.uniform(ws.lo.x(), ws.hi.x()), rng.uniform(ws.lo.y(), ws.hi.y()),
                                rng.uniform(config_.spawn_z_min, config_.spawn_z_max));
  state.gripper.yaw = rng.uniform(0.0, kTwoPi);
  state.jaw = 1.0;
  state.grasped.reset();
  state.step_count = 0;
  state.terminal = false;
  return {state, observe(state)};
}

bool KinSim::interacting(const SimState& state) const {
  return state.grasped.has_value() || state.gripper.position.z() < config_.l_z;
}

SimState KinSim::apply_kinematics(const SimState& state, const Action& action) const {
  SimState next = state;
  next.gripper.position += action.xyz * config_.delta_xyz;
  next.gripper.yaw += action.theta * config_.delta_theta;
  // Continuous commands map the jaw directly. Discrete commands actuate the
  // jaw only through the toggle command; movement one-hots leave it alone.
  if (config_.action_space == ActionSpace::kDiscrete && std::abs(action.jaw) <= 0.5) {
    next.jaw = state.jaw;
  } else {
    next.jaw = action.jaw;
  }
  next.step_count = state.step_count + 1;
  return next;
}

SimState KinSim::predict_next_state(const SimState& state, const Action& action) const {
  if (interacting(state)) {
    throw ValidationError(
        "predict_next_state called in the interaction regime (gripper below L_z or object grasped)");
  }
  return apply_kinematics(state, clip_action(action));
}

StepResult KinSim::step(const SimState& state, const Action& action) const {
  if (state.terminal) throw ValidationError("cannot step a terminal state");

  const Action a = clip_action(action);
  const bool contact_regime = interacting(state);
  SimState next = apply_kinematics(state, a);

  if (state.grasped) {
    // Rigid attachment: the grasped object follows the gripper motion.
    const int i = *state.grasped;
    const double dyaw = next.gripper.yaw - state.gripper.yaw;
    const Vec3 arm = state.objects[i].position - state.gripper.position;
    next.objects[i].position = next.gripper.position + apply_rotation(RotationAngle{dyaw}, arm);
    next.objects[i].yaw = state.objects[i].yaw + dyaw;
  }

  if (next.grasped && next.jaw > config_.jaw_open) {
    next.grasped.reset();  // released object keeps its pose
  } else if (!next.grasped && contact_regime && state.jaw >= config_.jaw_close &&
             next.jaw < config_.jaw_close) {
    // Closing transition below L_z: capture the nearest movable object.
    int best = -1;
    double best_dist = config_.capture_radius;
    for (int i = 0; i < config_.num_objects; ++i) {
      if (!next.movable[i]) continue;
      const double d = (next.objects[i].position - next.gripper.position).norm();
      if (d <= best_dist) {
        best_dist = d;
        best = i;
      }
    }
    if (best >= 0) next.grasped = best;
  }

  double reward = 0.0;
  if (next.grasped && next.objects[*next.grasped].position.z() > config_.lift_height) {
    reward = 1.0;
    next.terminal = true;
  } else if (next.step_count >= config_.h_max) {
    next.terminal = true;
  }

  return {next, observe(next), reward, next.terminal};
}

Observation KinSim::observe(const SimState& state) const {
  Observation obs;
  std::vector<Vec3> gripper_world = place_template(gripper_template_, state.gripper);
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : gripper_world) centroid += p;
  centroid /= static_cast<double>(gripper_world.size());

  obs.gripper_cloud.points.reserve(gripper_world.size());
  for (const Vec3& p : gripper_world) obs.gripper_cloud.points.emplace_back(p - centroid);

  obs.object_clouds.resize(state.objects.size());
  for (std::size_t i = 0; i < state.objects.size(); ++i) {
    std::vector<Vec3> world = place_template(object_template_, state.objects[i]);
    obs.object_clouds[i].points.reserve(world.size());
    for (const Vec3& p : world) obs.object_clouds[i].points.emplace_back(p - centroid);
  }
  obs.jaw = state.jaw;
  return obs;
}

SimState KinSim::state_from_snapshot(const SceneSnapshot& snapshot) const {
  if (static_cast<int>(snapshot.objects.size()) != config_.num_objects) {
    throw ValidationError("snapshot object count does not match the environment's M");
  }
  if (snapshot.movable.size() != snapshot.objects.size()) {
    throw ValidationError("snapshot movable flags do not match its object count");
  }
  SimState state;
  state.gripper = snapshot.gripper;
  state.jaw = snapshot.jaw;
  state.objects = snapshot.objects;
  state.movable = snapshot.movable;
  state.grasped.reset();
  state.step_count = 0;
  state.terminal = false;
  return state;
}

bool KinSim::in_reset_support(const SceneSnapshot& snapshot) const {
  const Aabb& ws = config_.workspace;
  const Vec3& g = snapshot.gripper.position;
  if (!ws.contains_xy(g)) return false;
  if (g.z() < config_.spawn_z_min || g.z() > config_.spawn_z_max) return false;
  const double rest_z = 0.5 * config_.object_height;
  for (const BodyPose& obj : snapshot.objects) {
    if (!ws.contains_xy(obj.position)) return false;
    if (std::abs(obj.position.z() - rest_z) > kLandingTol) return false;
  }
  return true;
}

namespace {

double cloud_discrepancy(const PointCloud& a, const PointCloud& b) {
  if (a.points.size() != b.points.size()) {
    throw ValidationError("cloud size mismatch between episode and replay");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    worst = std::max(worst, (a.points[i] - b.points[i]).norm());
  }
  return worst;
}

double observation_discrepancy(const Observation& a, const Observation& b) {
  if (a.object_clouds.size() != b.object_clouds.size()) {
    throw ValidationError("object segment count mismatch between episode and replay");
  }
  double worst = cloud_discrepancy(a.gripper_cloud, b.gripper_cloud);
  for (std::size_t i = 0; i < a.object_clouds.size(); ++i) {
    worst = std::max(worst, cloud_discrepancy(a.object_clouds[i], b.object_clouds[i]));
  }
  return worst;
}

}  // namespace

FeasibilityReport KinSim::replay_check(const Episode& episode, const SimState& s0,
                                       double tolerance) const {
  if (episode.transitions.empty()) throw ValidationError("cannot replay an empty episode");
  const int h = episode.horizon();

  FeasibilityReport report;
  report.initial_obs_discrepancy =
      observation_discrepancy(episode.transitions[0].observation, observe(s0));
  report.initial_jaw_discrepancy = std::abs(episode.transitions[0].observation.jaw - s0.jaw);
  report.max_obs_discrepancy = report.initial_obs_discrepancy;
  report.max_jaw_discrepancy = report.initial_jaw_discrepancy;
  bool initial_ok = report.initial_obs_discrepancy <= tolerance &&
                    report.initial_jaw_discrepancy <= tolerance &&
                    episode.transitions[0].reward == 0.0 && !episode.transitions[0].terminal;
  if (!initial_ok) report.first_mismatch_step = -1;

  SimState state = s0;
  for (int t = 0; t < h; ++t) {
    const StepResult res = step(state, episode.transitions[t].action);
    const Transition& expected = episode.transitions[t + 1];

    StepCheck check;
    check.obs_discrepancy = observation_discrepancy(expected.observation, res.observation);
    check.jaw_discrepancy = std::abs(expected.observation.jaw - res.observation.jaw);
    check.reward_match = expected.reward == res.reward;
    check.terminal_match = expected.terminal == res.terminal;
    report.steps.push_back(check);

    report.max_obs_discrepancy = std::max(report.max_obs_discrepancy, check.obs_discrepancy);
    report.max_jaw_discrepancy = std::max(report.max_jaw_discrepancy, check.jaw_discrepancy);
    report.rewards_match = report.rewards_match && check.reward_match;
    report.terminals_match = report.terminals_match && check.terminal_match;

    const bool ok = check.obs_discrepancy <= tolerance && check.jaw_discrepancy <= tolerance &&
                    check.reward_match && check.terminal_match;
    if (!ok && !report.first_mismatch_step) report.first_mismatch_step = t;

    state = res.state;
    if (res.terminal && t + 1 < h) {
      // Replay terminated early; remaining transitions cannot be reproduced.
      if (!report.first_mismatch_step) report.first_mismatch_step = t;
      report.terminals_match = false;
      break;
    }
  }

  report.feasible = initial_ok && !report.first_mismatch_step &&
                    static_cast<int>(report.steps.size()) == h && report.rewards_match &&
                    report.terminals_match && report.max_obs_discrepancy <= tolerance &&
                    report.max_jaw_discrepancy <= tolerance;
  return report;
}

namespace {

int movable_index_of(const SimState& state) {
  for (std::size_t i = 0; i < state.movable.size(); ++i) {
    if (state.movable[i]) return static_cast<int>(i);
  }
  throw ValidationError("no movable object in state");
}

Action continuous_demo_action(const SimState& state, const EnvConfig& cfg) {
  Action a;
  if (state.grasped) {
    a.xyz = Vec3(0.0, 0.0, 1.0);
    a.jaw = -1.0;
    return a;
  }
  const BodyPose& target = state.objects[movable_index_of(state)];
  const Vec3 delta = target.position - state.gripper.position;
  const double grasp_z = 0.6 * cfg.object_height;
  const double yaw_step =
      clip_unit(yaw_residual_quarter(target.yaw, state.gripper.yaw) / cfg.delta_theta);

  if (std::abs(delta.x()) > kLandingTol || std::abs(delta.y()) > kLandingTol) {
    // Straight-line approach with the xy speed capped in Euclidean norm, so
    // the command stays inside [-1,1] under any later isometric rotation.
    Vec3 v(delta.x() / cfg.delta_xyz, delta.y() / cfg.delta_xyz, 0.0);
    const double norm = std::hypot(v.x(), v.y());
    if (norm > 1.0) v /= norm * (1.0 + 1e-12);
    a.xyz = v;
    a.theta = yaw_step;
    a.jaw = 1.0;
  } else if (std::abs(state.gripper.position.z() - grasp_z) > kLandingTol) {
    a.xyz = Vec3(0.0, 0.0, clip_unit((grasp_z - state.gripper.position.z()) / cfg.delta_xyz));
    a.theta = yaw_step;
    a.jaw = 1.0;
  } else {
    a.jaw = -1.0;  // close over the object
  }
  return a;
}

Action discrete_command(int axis, double sign) {
  Action a;
  if (axis < 3) {
    a.xyz[axis] = sign;
  } else if (axis == 3) {
    a.theta = sign;
  } else {
    a.jaw = sign;
  }
  return a;
}

Action discrete_demo_action(const SimState& state, const EnvConfig& cfg) {
  if (state.grasped) return discrete_command(2, 1.0);  // lift

  const BodyPose& target = state.objects[movable_index_of(state)];
  const Vec3 delta = target.position - state.gripper.position;
  const double grasp_z = 0.6 * cfg.object_height;

  // Staircase approach: step along whichever axis is further off.
  if (std::abs(delta.x()) > 0.5 * cfg.delta_xyz || std::abs(delta.y()) > 0.5 * cfg.delta_xyz) {
    if (std::abs(delta.x()) >= std::abs(delta.y())) {
      return discrete_command(0, delta.x() > 0.0 ? 1.0 : -1.0);
    }
    return discrete_command(1, delta.y() > 0.0 ? 1.0 : -1.0);
  }
  if (state.gripper.position.z() - grasp_z > 0.5 * cfg.delta_xyz) {
    return discrete_command(2, -1.0);
  }
  // Jaw toggle: jaws are open here, so the realized command closes them.
  return discrete_command(4, -1.0);
}

}  // namespace

Episode scripted_demo(const KinSim& sim, std::uint64_t seed) {
  const EnvConfig& cfg = sim.config();
  auto [state, obs] = sim.reset(seed);

  Episode ep;
  ep.origin = EpisodeOrigin::kDemonstration;
  ep.initial_state = state.snapshot();
  ep.transitions.push_back({Action::zero(), 0.0, obs, false});

  double final_reward = 0.0;
  while (!state.terminal) {
    const Action a = cfg.action_space == ActionSpace::kDiscrete
                         ? discrete_demo_action(state, cfg)
                         : continuous_demo_action(state, cfg);
    ep.transitions.back().action = a;
    StepResult res = sim.step(state, a);
    ep.transitions.push_back({Action::zero(), res.reward, res.observation, res.terminal});
    state = res.state;
    final_reward = res.reward;
  }
  if (final_reward != 1.0) {
    throw ValidationError("scripted demo failed to complete the pick within the horizon");
  }
  return ep;
}

}  // namespace mea
