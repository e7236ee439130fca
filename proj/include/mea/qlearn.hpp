#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mea/rng.hpp"
#include "mea/sim.hpp"
#include "mea/trajectory.hpp"
#include "mea/voxel.hpp"

namespace mea {

struct RlConfig {
  double gamma = 0.99;
  double learning_rate = 0.01;
  int updates = 20000;
  int batch_size = 32;
  int eval_every = 1000;
  int eval_rollouts = 20;
  int coarse_bins = 8;  // depth channels downsampled to coarse_bins^2
  VoxelGridConfig view;
  std::uint64_t eval_seed = 20240; // fixed evaluation states, shared across eval points

  /// Bootstrap targets are clamped into this range when set. The default is
  /// the feasible return range of the sparse binary-reward task; expert-only
  /// buffers otherwise drive the max-bootstrap into an overestimation
  /// spiral. Reset to nullopt for unclamped textbook targets.
  std::optional<std::pair<double, double>> target_clamp = std::pair<double, double>{0.0, 1.0};

  /// Conservative regularizer weight: each update additionally lowers the
  /// mean Q over all actions and raises the data action by the same amount,
  /// keeping actions without data support pessimistic. 0 disables it.
  double conservative_coef = 0.0;

  /// Fraction of the final updates whose iterates are averaged into the
  /// returned model (0 disables averaging). Smooths late-training noise.
  double average_tail = 0.0;

  void validate() const;
};

/// The 9-command discrete set: +-x, +-y, +-z, +-theta, jaw toggle.
inline constexpr int kNumDiscreteActions = 9;

/// Index of a stored discrete command. Both realized jaw commands map to the
/// toggle index. Throws when the action is not in the discrete set.
int discrete_action_index(const Action& action);

/// Realized command for an action index; the jaw toggle closes when the jaws
/// are open (jaw >= 0) and opens them otherwise.
Action discrete_command_for(int index, double current_jaw);

/// Depth channels downsampled by block-min (empty pixels dominated by any
/// occupied value), normalized by n_voxel, flattened, with the jaw scalar
/// appended.
Eigen::VectorXd featurize(const Observation& obs, const RlConfig& cfg);

int feature_dimension(int num_objects, const RlConfig& cfg);

/// Linear Q: one weight vector per discrete action.
struct QModel {
  int n_actions = 0;
  int feature_dim = 0;
  std::vector<Eigen::VectorXd> weights;

  static QModel zeros(int n_actions, int feature_dim);
  double value(const Eigen::VectorXd& phi, int action) const;
  int greedy(const Eigen::VectorXd& phi) const;  // first maximum wins ties
};

struct EvalPoint {
  int step = 0;
  double success_rate = 0.0;
  double mean_score = 0.0;
};

struct EvalCurve {
  std::vector<EvalPoint> points;
};

struct FeatureTransition {
  Eigen::VectorXd phi;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_phi;
  bool terminal = false;
};

/// Q-learning on a fixed dataset: uniform minibatches, target
/// r + gamma * max_a Q(s', a) with no bootstrapping through terminals,
/// mean-gradient update per batch. `probe` runs after every eval_every
/// updates.
QModel fit_q(const std::vector<FeatureTransition>& data, int n_actions, int feature_dim,
             const RlConfig& cfg, Rng& rng,
             const std::function<void(int, const QModel&)>& probe = nullptr);

/// Featurizes the buffer's transitions, runs fit_q, and evaluates greedily
/// in the simulator every eval_every updates. Requires discrete-action
/// episodes.
std::pair<QModel, EvalCurve> train_q(const ReplayBuffer& buffer, const KinSim& sim,
                                     const RlConfig& cfg, Rng& rng);

struct RolloutResult {
  bool success = false;
  int steps = 0;
  double score = 0.0;
};

RolloutResult evaluate_rollout(const KinSim& sim, const QModel& model, const RlConfig& cfg,
                               std::uint64_t seed);

/// Smallest evaluation step after which every success rate stays positive;
/// nullopt when no such step exists. Throws on an empty curve.
std::optional<int> improvement_timestep(const EvalCurve& curve);

/// Completion-speed score: (H_max - H) / H_max on success, 0 on failure.
/// Requires 0 < H <= H_max.
double grasp_score(bool success, int h, int h_max);

void write_curve_csv(const std::string& path, const EvalCurve& curve);
void write_curve_svg(const std::string& path, const EvalCurve& curve);
void save_model(const std::string& path, const QModel& model);
QModel load_model(const std::string& path);

}  // namespace mea
