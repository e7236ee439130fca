#include "mea/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "mea/errors.hpp"

namespace mea {
namespace {

using nlohmann::json;

const char* kActionNames[kNumDiscreteActions] = {"+x", "-x", "+y", "-y", "+z",
                                                 "-z", "+theta", "-theta", "jaw"};

}  // namespace

void RlConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("RlConfig.gamma outside [0,1)");
  if (!(learning_rate > 0.0)) throw ValidationError("RlConfig.learning_rate must be positive");
  if (conservative_coef < 0.0) throw ValidationError("RlConfig.conservative_coef must be non-negative");
  if (average_tail < 0.0 || average_tail > 1.0) throw ValidationError("RlConfig.average_tail outside [0,1]");
  if (updates <= 0 || batch_size <= 0 || eval_every <= 0 || eval_rollouts <= 0) {
    throw ValidationError("RlConfig counts must be positive");
  }
  if (updates % eval_every != 0) {
    throw ValidationError("RlConfig.updates must be a multiple of eval_every");
  }
  view.validate();
  if (coarse_bins <= 0 || view.n_voxel % coarse_bins != 0) {
    throw ValidationError("RlConfig.coarse_bins must divide n_voxel");
  }
}

int discrete_action_index(const Action& a) {
  auto matches = [&](double x, double y, double z, double theta, double jaw) {
    return a.xyz.x() == x && a.xyz.y() == y && a.xyz.z() == z && a.theta == theta && a.jaw == jaw;
  };
  if (matches(1, 0, 0, 0, 0)) return 0;
  if (matches(-1, 0, 0, 0, 0)) return 1;
  if (matches(0, 1, 0, 0, 0)) return 2;
  if (matches(0, -1, 0, 0, 0)) return 3;
  if (matches(0, 0, 1, 0, 0)) return 4;
  if (matches(0, 0, -1, 0, 0)) return 5;
  if (matches(0, 0, 0, 1, 0)) return 6;
  if (matches(0, 0, 0, -1, 0)) return 7;
  if (matches(0, 0, 0, 0, 1) || matches(0, 0, 0, 0, -1)) return 8;
  throw ValidationError(
      "continuous-action episode: train_q requires the discrete environment variant");
}

Action discrete_command_for(int index, double current_jaw) {
  if (index < 0 || index >= kNumDiscreteActions) {
    throw ValidationError("discrete action index outside [0,9)");
  }
  Action a;
  switch (index) {
    case 0: a.xyz.x() = 1; break;
    case 1: a.xyz.x() = -1; break;
    case 2: a.xyz.y() = 1; break;
    case 3: a.xyz.y() = -1; break;
    case 4: a.xyz.z() = 1; break;
    case 5: a.xyz.z() = -1; break;
    case 6: a.theta = 1; break;
    case 7: a.theta = -1; break;
    case 8: a.jaw = current_jaw >= 0.0 ? -1.0 : 1.0; break;
  }
  return a;
}

int feature_dimension(int num_objects, const RlConfig& cfg) {
  return (num_objects + 1) * cfg.coarse_bins * cfg.coarse_bins + 1;
}

Eigen::VectorXd featurize(const Observation& obs, const RlConfig& cfg) {
  const std::vector<DepthImage> channels = render_observation(obs, cfg.view);
  const int bins = cfg.coarse_bins;
  const int block = cfg.view.n_voxel / bins;

  Eigen::VectorXd phi(static_cast<int>(channels.size()) * bins * bins + 1);
  int offset = 0;
  for (const DepthImage& channel : channels) {
    for (int by = 0; by < bins; ++by) {
      for (int bx = 0; bx < bins; ++bx) {
        int best = 0;
        for (int y = by * block; y < (by + 1) * block; ++y) {
          for (int x = bx * block; x < (bx + 1) * block; ++x) {
            const int v = channel.at(x, y);
            if (v != 0 && (best == 0 || v < best)) best = v;
          }
        }
        phi[offset + by * bins + bx] = static_cast<double>(best) / cfg.view.n_voxel;
      }
    }
    offset += bins * bins;
  }
  phi[offset] = obs.jaw;
  return phi;
}

QModel QModel::zeros(int n_actions, int feature_dim) {
  QModel model;
  model.n_actions = n_actions;
  model.feature_dim = feature_dim;
  model.weights.assign(n_actions, Eigen::VectorXd::Zero(feature_dim));
  return model;
}

double QModel::value(const Eigen::VectorXd& phi, int action) const {
  return weights[action].dot(phi);
}

int QModel::greedy(const Eigen::VectorXd& phi) const {
  int best = 0;
  double best_value = value(phi, 0);
  for (int a = 1; a < n_actions; ++a) {
    const double v = value(phi, a);
    if (v > best_value) {
      best_value = v;
      best = a;
    }
  }
  return best;
}

QModel fit_q(const std::vector<FeatureTransition>& data, int n_actions, int feature_dim,
             const RlConfig& cfg, Rng& rng,
             const std::function<void(int, const QModel&)>& probe) {
  cfg.validate();
  if (data.empty()) throw ValidationError("fit_q received an empty dataset");

  QModel model = QModel::zeros(n_actions, feature_dim);
  std::vector<Eigen::VectorXd> grad(n_actions, Eigen::VectorXd::Zero(feature_dim));

  const int tail_start =
      cfg.average_tail > 0.0
          ? cfg.updates - static_cast<int>(cfg.average_tail * cfg.updates) + 1
          : cfg.updates + 1;
  QModel tail_sum = QModel::zeros(n_actions, feature_dim);
  int tail_count = 0;

  for (int update = 1; update <= cfg.updates; ++update) {
    for (Eigen::VectorXd& g : grad) g.setZero();
    for (int b = 0; b < cfg.batch_size; ++b) {
      const FeatureTransition& tr = data[rng.uniform_index(data.size())];
      double target = tr.reward;
      if (!tr.terminal) {
        double best = model.value(tr.next_phi, 0);
        for (int a = 1; a < n_actions; ++a) best = std::max(best, model.value(tr.next_phi, a));
        target += cfg.gamma * best;
      }
      if (cfg.target_clamp) {
        target = std::clamp(target, cfg.target_clamp->first, cfg.target_clamp->second);
      }
      const double td = target - model.value(tr.phi, tr.action);
      grad[tr.action] += td * tr.phi;
      if (cfg.conservative_coef > 0.0) {
        // Pessimism for actions without data support: lower the softmax-
        // weighted Q over all actions and raise the data action in exchange.
        // The soft weighting spreads the push across near-ties, which keeps
        // the equilibrium stable when several data actions share a state.
        constexpr double kSoftTemp = 0.1;
        double best = model.value(tr.phi, 0);
        for (int a = 1; a < n_actions; ++a) best = std::max(best, model.value(tr.phi, a));
        double normalizer = 0.0;
        for (int a = 0; a < n_actions; ++a) {
          normalizer += std::exp((model.value(tr.phi, a) - best) / kSoftTemp);
        }
        for (int a = 0; a < n_actions; ++a) {
          const double weight = std::exp((model.value(tr.phi, a) - best) / kSoftTemp) / normalizer;
          grad[a] -= cfg.conservative_coef * weight * tr.phi;
        }
        grad[tr.action] += cfg.conservative_coef * tr.phi;
      }
    }
    const double scale = cfg.learning_rate / cfg.batch_size;
    for (int a = 0; a < n_actions; ++a) model.weights[a] += scale * grad[a];

    if (update >= tail_start) {
      for (int a = 0; a < n_actions; ++a) tail_sum.weights[a] += model.weights[a];
      ++tail_count;
    }
    if (update == cfg.updates && tail_count > 0) {
      for (int a = 0; a < n_actions; ++a) model.weights[a] = tail_sum.weights[a] / tail_count;
    }
    if (probe && update % cfg.eval_every == 0) probe(update, model);
  }
  return model;
}

RolloutResult evaluate_rollout(const KinSim& sim, const QModel& model, const RlConfig& cfg,
                               std::uint64_t seed) {
  auto [state, obs] = sim.reset(seed);
  double final_reward = 0.0;
  while (!state.terminal) {
    const Eigen::VectorXd phi = featurize(obs, cfg);
    const Action cmd = discrete_command_for(model.greedy(phi), state.jaw);
    StepResult res = sim.step(state, cmd);
    state = res.state;
    obs = res.observation;
    final_reward = res.reward;
  }
  RolloutResult result;
  result.success = final_reward == 1.0;
  result.steps = state.step_count;
  result.score = grasp_score(result.success, state.step_count, sim.config().h_max);
  return result;
}

std::pair<QModel, EvalCurve> train_q(const ReplayBuffer& buffer, const KinSim& sim,
                                     const RlConfig& cfg, Rng& rng) {
  cfg.validate();
  if (buffer.size() == 0) throw ValidationError("replay buffer contains no episodes");

  std::vector<FeatureTransition> data;
  for (const Episode& ep : buffer.episodes()) {
    const int h = ep.horizon();
    std::vector<Eigen::VectorXd> features(h + 1);
    for (int t = 0; t <= h; ++t) features[t] = featurize(ep.transitions[t].observation, cfg);
    for (int t = 0; t < h; ++t) {
      FeatureTransition tr;
      tr.phi = features[t];
      tr.action = discrete_action_index(ep.transitions[t].action);
      tr.reward = ep.transitions[t + 1].reward;
      tr.next_phi = features[t + 1];
      tr.terminal = ep.transitions[t + 1].terminal;
      data.push_back(std::move(tr));
    }
  }
  if (data.empty()) throw ValidationError("replay buffer episodes contain no transitions");

  const int dim = static_cast<int>(data.front().phi.size());
  EvalCurve curve;
  auto probe = [&](int update, const QModel& model) {
    int successes = 0;
    double score_sum = 0.0;
    for (int r = 0; r < cfg.eval_rollouts; ++r) {
      const RolloutResult result = evaluate_rollout(sim, model, cfg, cfg.eval_seed + r);
      successes += result.success ? 1 : 0;
      score_sum += result.score;
    }
    curve.points.push_back({update, static_cast<double>(successes) / cfg.eval_rollouts,
                            score_sum / cfg.eval_rollouts});
  };

  QModel model = fit_q(data, kNumDiscreteActions, dim, cfg, rng, probe);
  return {std::move(model), std::move(curve)};
}

std::optional<int> improvement_timestep(const EvalCurve& curve) {
  if (curve.points.empty()) throw ValidationError("evaluation curve is empty");
  std::optional<int> candidate;
  for (const EvalPoint& point : curve.points) {
    if (point.success_rate > 0.0) {
      if (!candidate) candidate = point.step;
    } else {
      candidate.reset();
    }
  }
  return candidate;
}

double grasp_score(bool success, int h, int h_max) {
  if (h <= 0 || h > h_max) {
    throw ValidationError("grasp_score requires 0 < H <= H_max");
  }
  if (!success) return 0.0;
  return static_cast<double>(h_max - h) / h_max;
}

void write_curve_csv(const std::string& path, const EvalCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "step,success_rate,mean_score\n";
  char line[128];
  for (const EvalPoint& p : curve.points) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g\n", p.step, p.success_rate, p.mean_score);
    out << line;
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_curve_svg(const std::string& path, const EvalCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  const int width = 640, height = 400, margin = 48;
  const double x_max = curve.points.empty() ? 1.0 : curve.points.back().step;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">training step</text>\n";
  out << "<text x=\"14\" y=\"" << height / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << height / 2
      << ")\">success rate</text>\n";

  if (!curve.points.empty()) {
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    char buf[64];
    for (const EvalPoint& p : curve.points) {
      const double px = margin + (width - 2.0 * margin) * (p.step / x_max);
      const double py = height - margin - (height - 2.0 * margin) * p.success_rate;
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px, py);
      out << buf;
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path);
}

void save_model(const std::string& path, const QModel& model) {
  json weights = json::array();
  for (const Eigen::VectorXd& w : model.weights) {
    json row = json::array();
    for (int i = 0; i < w.size(); ++i) row.push_back(w[i]);
    weights.push_back(row);
  }
  json doc{{"n_actions", model.n_actions},
           {"feature_dim", model.feature_dim},
           {"action_names", json::array()},
           {"weights", weights}};
  for (const char* name : kActionNames) doc["action_names"].push_back(name);

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << doc.dump() << '\n';
  if (!out) throw IoError("write failed: " + path);
}

QModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& err) {
    throw ParseError(std::string("malformed model file: ") + err.what());
  }
  QModel model;
  model.n_actions = doc.at("n_actions").get<int>();
  model.feature_dim = doc.at("feature_dim").get<int>();
  for (const json& row : doc.at("weights")) {
    Eigen::VectorXd w(model.feature_dim);
    if (static_cast<int>(row.size()) != model.feature_dim) {
      throw ParseError("weight row length does not match feature_dim");
    }
    for (int i = 0; i < model.feature_dim; ++i) w[i] = row[i].get<double>();
    model.weights.push_back(std::move(w));
  }
  if (static_cast<int>(model.weights.size()) != model.n_actions) {
    throw ParseError("weight row count does not match n_actions");
  }
  return model;
}

}  // namespace mea
