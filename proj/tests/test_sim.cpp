#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mea/errors.hpp"
#include "mea/sim.hpp"
#include "oracles.hpp"

using namespace mea;

namespace {

SimState no_interaction_state(const KinSim& sim) {
  SceneSnapshot snap;
  snap.gripper = {Vec3(0.0, 0.0, 0.15), 0.2};
  snap.jaw = 1.0;
  snap.objects = {{Vec3(0.1, 0.2, 0.025), 0.7}};
  snap.movable = {true};
  SimState state = sim.state_from_snapshot(snap);
  return state;
}

}  // namespace

TEST_CASE("reset is deterministic and respects the start contract") {
  KinSim sim{EnvConfig{}};
  const auto [s1, o1] = sim.reset(42);
  const auto [s2, o2] = sim.reset(42);
  CHECK(s1.gripper.position == s2.gripper.position);
  CHECK(s1.gripper.yaw == s2.gripper.yaw);
  CHECK(s1.objects[0].position == s2.objects[0].position);
  CHECK(testing::observation_difference(o1, o2) == 0.0);

  const auto [s3, o3] = sim.reset(43);
  CHECK(s1.objects[0].position != s3.objects[0].position);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto [state, obs] = sim.reset(seed);
    CHECK(state.gripper.position.z() >= sim.config().l_z);
    CHECK(state.jaw == 1.0);
    CHECK(sim.config().workspace.contains(state.gripper.position));
    CHECK(sim.in_reset_support(state.snapshot()));
    CHECK_FALSE(state.grasped.has_value());
  }
}

TEST_CASE("predict_next_state matches the deterministic transition equations") {
  KinSim sim{EnvConfig{}};

  SUBCASE("objects displace by -a_xyz * delta_xyz in the gripper frame") {
    SimState s = no_interaction_state(sim);
    s.gripper.position = Vec3(0, 0, 0.15);
    s.objects[0].position = Vec3(0.1, 0.2, 0.15);  // gripper-centric [0.1, 0.2, 0]
    Action a;
    a.xyz = Vec3(1, 0, 0);
    a.jaw = 1.0;
    const SimState next = sim.predict_next_state(s, a);
    const Vec3 relative = next.objects[0].position - next.gripper.position;
    CHECK(relative.x() == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(relative.y() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(next.objects[0].position == s.objects[0].position);  // world pose unchanged
  }

  SUBCASE("yaw advances by a_theta * delta_theta") {
    SimState s = no_interaction_state(sim);
    s.gripper.yaw = 0.2;
    Action a;
    a.theta = -1.0;
    a.jaw = 1.0;
    const SimState next = sim.predict_next_state(s, a);
    CHECK(next.gripper.yaw == doctest::Approx(0.15).epsilon(1e-12));
  }

  SUBCASE("null action only advances the step counter") {
    SimState s = no_interaction_state(sim);
    Action a;
    a.jaw = s.jaw;
    const SimState next = sim.predict_next_state(s, a);
    CHECK(next.gripper.position == s.gripper.position);
    CHECK(next.gripper.yaw == s.gripper.yaw);
    CHECK(next.jaw == s.jaw);
    CHECK(next.objects[0].position == s.objects[0].position);
    CHECK(next.step_count == s.step_count + 1);
  }

  SUBCASE("interaction regime is rejected") {
    SimState s = no_interaction_state(sim);
    s.gripper.position.z() = 0.05;  // below L_z
    CHECK_THROWS_WITH_AS((void)sim.predict_next_state(s, Action::zero()),
                         doctest::Contains("interaction regime"), ValidationError);
    SimState grasping = no_interaction_state(sim);
    grasping.grasped = 0;
    CHECK_THROWS_AS((void)sim.predict_next_state(grasping, Action::zero()), ValidationError);
  }
}

TEST_CASE("step equals predict_next_state bitwise in the no-interaction regime") {
  KinSim sim{EnvConfig{}};
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    SimState s = no_interaction_state(sim);
    s.gripper.position = Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                              rng.uniform(sim.config().l_z, 0.3));
    s.gripper.yaw = rng.uniform(0, kTwoPi);
    Action a;
    a.xyz = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    a.theta = rng.uniform(-1, 1);
    a.jaw = rng.uniform(-0.4, 1);  // stays above the close threshold
    const SimState predicted = sim.predict_next_state(s, a);
    const StepResult stepped = sim.step(s, a);
    CHECK(stepped.state.gripper.position == predicted.gripper.position);
    CHECK(stepped.state.gripper.yaw == predicted.gripper.yaw);
    CHECK(stepped.state.jaw == predicted.jaw);
    CHECK(stepped.state.objects[0].position == predicted.objects[0].position);
    CHECK(stepped.state.objects[0].yaw == predicted.objects[0].yaw);
    CHECK(stepped.state.step_count == predicted.step_count);
  }
}

TEST_CASE("step clips action components before use") {
  KinSim sim{EnvConfig{}};
  SimState s = no_interaction_state(sim);
  Action wild;
  wild.xyz = Vec3(5.0, -7.0, 0.5);
  wild.theta = 3.0;
  wild.jaw = 2.0;
  const StepResult res = sim.step(s, wild);
  CHECK(res.state.gripper.position.x() ==
        doctest::Approx(s.gripper.position.x() + sim.config().delta_xyz));
  CHECK(res.state.gripper.position.y() ==
        doctest::Approx(s.gripper.position.y() - sim.config().delta_xyz));
  CHECK(res.state.jaw == 1.0);
}

TEST_CASE("horizon cap terminates without reward") {
  EnvConfig cfg;
  cfg.h_max = 3;
  KinSim sim{cfg};
  auto [state, obs] = sim.reset(7);
  Action idle;
  idle.jaw = 1.0;
  StepResult res{};
  for (int t = 0; t < 3; ++t) res = sim.step(t == 0 ? state : res.state, idle);
  CHECK(res.terminal);
  CHECK(res.reward == 0.0);
  CHECK_THROWS_WITH_AS((void)sim.step(res.state, idle), doctest::Contains("terminal"),
                       ValidationError);
}

TEST_CASE("observe is gripper-centric and translation invariant") {
  KinSim sim{EnvConfig{}};
  const SimState s = no_interaction_state(sim);
  const Observation obs = sim.observe(s);
  CHECK(obs.gripper_cloud.centroid().norm() <= 1e-12);
  CHECK(static_cast<int>(obs.gripper_cloud.points.size()) == sim.config().points_per_segment);
  CHECK(static_cast<int>(obs.object_clouds[0].points.size()) == sim.config().points_per_segment);

  SimState shifted = s;
  const Vec3 offset(0.37, -1.2, 0.45);
  shifted.gripper.position += offset;
  shifted.objects[0].position += offset;
  const Observation obs2 = sim.observe(shifted);
  CHECK(testing::observation_difference(obs, obs2) <= 1e-12);
}

TEST_CASE("half-turn of the symmetric object template preserves its cloud as a set") {
  KinSim sim{EnvConfig{}};
  SimState s = no_interaction_state(sim);
  SimState rotated = s;
  rotated.objects[0].yaw += kPi;
  const Observation a = sim.observe(s);
  const Observation b = sim.observe(rotated);
  CHECK(testing::cloud_set_distance(a.object_clouds[0], b.object_clouds[0]) <= 1e-9);
  // The asymmetric gripper template must not be half-turn symmetric.
  SimState gripper_rotated = s;
  gripper_rotated.gripper.yaw += kPi;
  const Observation c = sim.observe(gripper_rotated);
  CHECK(testing::cloud_set_distance(a.gripper_cloud, c.gripper_cloud) > 1e-4);
}

TEST_CASE("scripted demo succeeds and replays against itself") {
  for (const ActionSpace space : {ActionSpace::kContinuous, ActionSpace::kDiscrete}) {
    EnvConfig cfg = space == ActionSpace::kDiscrete ? EnvConfig::discrete_defaults() : EnvConfig{};
    KinSim sim{cfg};
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 17ull, 99ull}) {
      const Episode ep = scripted_demo(sim, seed);
      CHECK(ep.transitions.back().reward == 1.0);
      CHECK(ep.transitions.back().terminal);
      CHECK(ep.horizon() <= cfg.h_max);
      validate_episode(ep, {.num_objects = cfg.num_objects, .h_max = cfg.h_max});

      const SimState s0 = sim.state_from_snapshot(*ep.initial_state);
      const FeasibilityReport report = sim.replay_check(ep, s0);
      CHECK(report.feasible);
      CHECK(report.max_obs_discrepancy <= 1e-9);

      // The demo keeps at least one step above L_z before descending.
      CHECK(testing::first_interaction_step(sim, ep, s0) >= 2);
    }
  }
}

TEST_CASE("step determinism: two replays agree bitwise") {
  KinSim sim{EnvConfig{}};
  const Episode ep = scripted_demo(sim, 11);
  const SimState s0 = sim.state_from_snapshot(*ep.initial_state);
  const SimState a = testing::replay_to_state(sim, ep, s0);
  const SimState b = testing::replay_to_state(sim, ep, s0);
  CHECK(a.gripper.position == b.gripper.position);
  CHECK(a.gripper.yaw == b.gripper.yaw);
  CHECK(a.objects[0].position == b.objects[0].position);
  CHECK(testing::state_difference(a, b) == 0.0);
}

TEST_CASE("a perturbed action is flagged at its own step") {
  KinSim sim{EnvConfig{}};
  Episode ep = scripted_demo(sim, 21);
  const int k = 2;
  ep.transitions[k].action.xyz.x() =
      std::clamp(ep.transitions[k].action.xyz.x() + 0.5, -1.0, 1.0);
  const SimState s0 = sim.state_from_snapshot(*ep.initial_state);
  const FeasibilityReport report = sim.replay_check(ep, s0);
  CHECK_FALSE(report.feasible);
  REQUIRE(report.first_mismatch_step.has_value());
  CHECK(*report.first_mismatch_step == k);
}

TEST_CASE("rotating the scene and the actions preserves outcomes") {
  // Rotational symmetry of the environment about the world z-axis.
  KinSim sim{EnvConfig{}};
  Rng rng(31);
  for (std::uint64_t seed : {5ull, 6ull, 7ull}) {
    const Episode ep = scripted_demo(sim, seed);
    const SimState s0 = sim.state_from_snapshot(*ep.initial_state);
    const double angle = rng.uniform(0, kTwoPi);
    const RotationAngle rot{angle};

    SimState rotated = s0;
    rotated.gripper.position = apply_rotation(rot, s0.gripper.position);
    rotated.gripper.yaw += angle;
    for (std::size_t i = 0; i < s0.objects.size(); ++i) {
      rotated.objects[i].position = apply_rotation(rot, s0.objects[i].position);
      rotated.objects[i].yaw += angle;
    }

    SimState state = rotated;
    for (int t = 0; t < ep.horizon(); ++t) {
      Action a = ep.transitions[t].action;
      a.xyz = apply_rotation(rot, a.xyz);
      const StepResult res = sim.step(state, a);
      CHECK(res.reward == ep.transitions[t + 1].reward);
      CHECK(res.terminal == ep.transitions[t + 1].terminal);
      state = res.state;
    }
  }
}

TEST_CASE("grasp latch holds through intermediate jaw values") {
  EnvConfig cfg;
  KinSim sim{cfg};
  // Put the gripper right above the object, inside the interaction zone.
  SceneSnapshot snap;
  snap.gripper = {Vec3(0.02, 0.01, 0.03), 0.0};
  snap.jaw = 1.0;
  snap.objects = {{Vec3(0.02, 0.01, 0.025), 0.4}};
  snap.movable = {true};
  SimState s = sim.state_from_snapshot(snap);

  Action close;
  close.jaw = -1.0;
  StepResult res = sim.step(s, close);
  REQUIRE(res.state.grasped == 0);

  // A movement command with jaw component 0 must not release.
  Action lift;
  lift.xyz = Vec3(0, 0, 1);
  lift.jaw = 0.0;
  res = sim.step(res.state, lift);
  CHECK(res.state.grasped == 0);
  CHECK(res.state.objects[0].position.z() == doctest::Approx(0.035));

  // Opening wide releases; the object keeps its pose.
  Action open;
  open.jaw = 1.0;
  res = sim.step(res.state, open);
  CHECK_FALSE(res.state.grasped.has_value());
  const Vec3 kept = res.state.objects[0].position;
  res = sim.step(res.state, lift);
  CHECK(res.state.objects[0].position == kept);
}

TEST_CASE("immovable objects are never grasped") {
  EnvConfig cfg;
  KinSim sim{cfg};
  SceneSnapshot snap;
  snap.gripper = {Vec3(0.0, 0.0, 0.03), 0.0};
  snap.jaw = 1.0;
  snap.objects = {{Vec3(0.0, 0.0, 0.025), 0.0}};
  snap.movable = {false};
  SimState s = sim.state_from_snapshot(snap);
  Action close;
  close.jaw = -1.0;
  const StepResult res = sim.step(s, close);
  CHECK_FALSE(res.state.grasped.has_value());
}

TEST_CASE("two-object variant hides movability but grasps only the movable one") {
  EnvConfig cfg;
  cfg.num_objects = 2;
  KinSim sim{cfg};
  const auto [state, obs] = sim.reset(3);
  CHECK(state.objects.size() == 2);
  CHECK(obs.object_clouds.size() == 2);
  int movable_count = 0;
  for (bool m : state.movable) movable_count += m ? 1 : 0;
  CHECK(movable_count == 1);

  const Episode ep = scripted_demo(sim, 3);
  CHECK(ep.transitions.back().reward == 1.0);
}
