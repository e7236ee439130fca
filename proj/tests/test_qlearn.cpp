#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mea/errors.hpp"
#include "mea/qlearn.hpp"
#include "mea/sim.hpp"

using namespace mea;

namespace {

/// Value-iteration oracle for a small deterministic MDP.
std::vector<std::vector<double>> value_iteration(
    const std::vector<std::vector<std::pair<int, double>>>& mdp, double gamma) {
  const int n_states = static_cast<int>(mdp.size());
  const int n_actions = static_cast<int>(mdp[0].size());
  std::vector<std::vector<double>> q(n_states, std::vector<double>(n_actions, 0.0));
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double delta = 0.0;
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        const auto [next, reward] = mdp[s][a];
        double best = q[next][0];
        for (int b = 1; b < n_actions; ++b) best = std::max(best, q[next][b]);
        const double updated = reward + gamma * best;
        delta = std::max(delta, std::abs(updated - q[s][a]));
        q[s][a] = updated;
      }
    }
    if (delta < 1e-14) break;
  }
  return q;
}

}  // namespace

TEST_CASE("featurize") {
  RlConfig cfg;

  SUBCASE("empty observation keeps only the jaw") {
    Observation obs;
    obs.object_clouds.resize(1);
    obs.jaw = 0.7;
    const Eigen::VectorXd phi = featurize(obs, cfg);
    CHECK(phi.size() == feature_dimension(1, cfg));
    for (int i = 0; i + 1 < phi.size(); ++i) CHECK(phi[i] == 0.0);
    CHECK(phi[phi.size() - 1] == 0.7);
  }

  SUBCASE("identical observations produce identical features") {
    KinSim sim{EnvConfig::discrete_defaults()};
    const auto [state, obs] = sim.reset(9);
    const Eigen::VectorXd a = featurize(obs, cfg);
    const Eigen::VectorXd b = featurize(obs, cfg);
    CHECK(a == b);
  }

  SUBCASE("a one-block shift moves the coarse features") {
    const int block = cfg.view.n_voxel / cfg.coarse_bins;
    const Vec3 size = cfg.view.voxel_size();
    Observation obs;
    obs.gripper_cloud.points = {cfg.view.voxel_center(33, 33, 30)};
    obs.object_clouds.push_back({{cfg.view.voxel_center(17, 25, 20)}});
    obs.jaw = 0.0;

    Observation shifted = obs;
    for (Vec3& p : shifted.object_clouds[0].points) p += Vec3(block * size.x(), 0, 0);
    for (Vec3& p : shifted.gripper_cloud.points) p += Vec3(block * size.x(), 0, 0);

    const Eigen::VectorXd base = featurize(obs, cfg);
    const Eigen::VectorXd moved = featurize(shifted, cfg);
    const int bins = cfg.coarse_bins;
    for (int channel = 0; channel < 2; ++channel) {
      for (int by = 0; by < bins; ++by) {
        for (int bx = 0; bx + 1 < bins; ++bx) {
          CHECK(moved[channel * bins * bins + by * bins + bx + 1] ==
                base[channel * bins * bins + by * bins + bx]);
        }
      }
    }
  }
}

TEST_CASE("fit_q reaches the value-iteration fixed point on a 2-state MDP") {
  // (next state, reward) per (state, action); gamma = 0.9.
  const std::vector<std::vector<std::pair<int, double>>> mdp = {
      {{0, 0.0}, {1, 0.0}},
      {{0, 1.0}, {1, 2.0}},
  };
  const double gamma = 0.9;
  const auto oracle = value_iteration(mdp, gamma);
  CHECK(oracle[1][1] == doctest::Approx(20.0).epsilon(1e-10));

  std::vector<FeatureTransition> data;
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      FeatureTransition tr;
      tr.phi = Eigen::VectorXd::Zero(2);
      tr.phi[s] = 1.0;
      tr.action = a;
      tr.reward = mdp[s][a].second;
      tr.next_phi = Eigen::VectorXd::Zero(2);
      tr.next_phi[mdp[s][a].first] = 1.0;
      tr.terminal = false;
      data.push_back(tr);
    }
  }

  RlConfig cfg;
  cfg.gamma = gamma;
  cfg.learning_rate = 1.0;
  cfg.updates = 6000;
  cfg.batch_size = 16;
  cfg.eval_every = 6000;
  cfg.target_clamp.reset();  // textbook targets; this instance's Q* reaches 20
  Rng rng(11);
  const QModel model = fit_q(data, 2, 2, cfg, rng);
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      Eigen::VectorXd phi = Eigen::VectorXd::Zero(2);
      phi[s] = 1.0;
      CHECK(model.value(phi, a) == doctest::Approx(oracle[s][a]).epsilon(1e-6 / 20.0));
    }
  }
}

TEST_CASE("train_q validates its inputs") {
  KinSim sim{EnvConfig::discrete_defaults()};
  RlConfig cfg;
  Rng rng(1);
  ReplayBuffer empty;
  CHECK_THROWS_WITH_AS((void)train_q(empty, sim, cfg, rng), doctest::Contains("no episodes"),
                       ValidationError);

  KinSim continuous_sim{EnvConfig{}};
  ReplayBuffer with_continuous;
  with_continuous.append(scripted_demo(continuous_sim, 2));
  CHECK_THROWS_WITH_AS((void)train_q(with_continuous, sim, cfg, rng),
                       doctest::Contains("discrete environment variant"), ValidationError);
}

TEST_CASE("training is deterministic given the seed") {
  KinSim sim{EnvConfig::discrete_defaults()};
  ReplayBuffer buffer;
  buffer.append(scripted_demo(sim, 100));
  buffer.append(scripted_demo(sim, 101));

  RlConfig cfg;
  cfg.updates = 400;
  cfg.eval_every = 200;
  cfg.eval_rollouts = 4;

  Rng rng_a(7);
  Rng rng_b(7);
  const auto [model_a, curve_a] = train_q(buffer, sim, cfg, rng_a);
  const auto [model_b, curve_b] = train_q(buffer, sim, cfg, rng_b);
  for (int a = 0; a < model_a.n_actions; ++a) CHECK(model_a.weights[a] == model_b.weights[a]);
  REQUIRE(curve_a.points.size() == curve_b.points.size());
  CHECK(curve_a.points.size() == 2);
  for (std::size_t i = 0; i < curve_a.points.size(); ++i) {
    CHECK(curve_a.points[i].step == curve_b.points[i].step);
    CHECK(curve_a.points[i].success_rate == curve_b.points[i].success_rate);
    CHECK(curve_a.points[i].mean_score == curve_b.points[i].mean_score);
  }
}

TEST_CASE("improvement timestep") {
  auto curve = [](std::vector<double> rates) {
    EvalCurve c;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      c.points.push_back({static_cast<int>((i + 1) * 1000), rates[i], 0.0});
    }
    return c;
  };
  CHECK(improvement_timestep(curve({0, 0, 0.2, 0.4, 0.6})) == 3000);
  CHECK(improvement_timestep(curve({0, 0.1, 0, 0.3, 0.5})) == 4000);
  CHECK_FALSE(improvement_timestep(curve({0, 0, 0})).has_value());
  CHECK(improvement_timestep(curve({0.5})) == 1000);
  CHECK_THROWS_AS((void)improvement_timestep(EvalCurve{}), ValidationError);
}

TEST_CASE("grasp score") {
  CHECK(grasp_score(true, 40, 80) == 0.5);
  CHECK(grasp_score(false, 40, 80) == 0.0);
  CHECK(grasp_score(true, 80, 80) == 0.0);
  CHECK_THROWS_AS((void)grasp_score(true, 81, 80), ValidationError);
  CHECK_THROWS_AS((void)grasp_score(true, 0, 80), ValidationError);
  double previous = 1.0;
  for (int h = 1; h <= 80; ++h) {
    const double s = grasp_score(true, h, 80);
    CHECK(s < previous);
    previous = s;
  }
}

TEST_CASE("discrete command realization toggles against the jaw state") {
  const Action close = discrete_command_for(8, 1.0);
  CHECK(close.jaw == -1.0);
  const Action open = discrete_command_for(8, -1.0);
  CHECK(open.jaw == 1.0);
  CHECK(discrete_action_index(close) == 8);
  CHECK(discrete_action_index(open) == 8);
  CHECK_THROWS_AS((void)discrete_command_for(9, 0.0), ValidationError);
  for (int i = 0; i < kNumDiscreteActions; ++i) {
    CHECK(discrete_action_index(discrete_command_for(i, 1.0)) == i);
  }
}

TEST_CASE("model save/load round-trips") {
  QModel model = QModel::zeros(kNumDiscreteActions, 3);
  model.weights[0] << 0.25, -1.5, 3.0;
  model.weights[8] << 1e-9, 2e17, -0.3333333333333333;
  const std::string path =
      (std::filesystem::temp_directory_path() / "mea_test_model.json").string();
  save_model(path, model);
  const QModel loaded = load_model(path);
  CHECK(loaded.n_actions == model.n_actions);
  CHECK(loaded.feature_dim == model.feature_dim);
  for (int a = 0; a < model.n_actions; ++a) CHECK(loaded.weights[a] == model.weights[a]);
  std::remove(path.c_str());
}
