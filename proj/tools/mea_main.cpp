#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mea/augment.hpp"
#include "mea/episode_io.hpp"
#include "mea/errors.hpp"
#include "mea/log.hpp"
#include "mea/phase.hpp"
#include "mea/qlearn.hpp"
#include "mea/rng.hpp"
#include "mea/run_config.hpp"
#include "mea/sim.hpp"
#include "mea/voxel.hpp"

namespace {

using namespace mea;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

struct CommonOptions {
  std::string config_path;
  std::string mode = "continuous";
  std::vector<std::string> overrides;  // key=value pairs
};

/// Builds the run configuration: mode defaults, then the config file, then
/// explicit key=value overrides. Validation happens before any work starts.
RunConfig make_run_config(const CommonOptions& common) {
  RunConfig config;
  if (common.mode == "discrete") {
    config.env = EnvConfig::discrete_defaults();
    config.policy = AugmentationPolicy::defaults_for(AugmentationPolicy::Mode::kDiscrete);
  } else if (common.mode == "continuous") {
    config.env = EnvConfig{};
    config.policy = AugmentationPolicy::defaults_for(AugmentationPolicy::Mode::kContinuous);
  } else {
    throw ValidationError("--mode must be continuous or discrete");
  }
  if (!common.config_path.empty()) apply_config_file(config, common.config_path);
  for (const std::string& entry : common.overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got " + entry);
    apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
  }
  config.validate();
  return config;
}

/// Same, but the episode file's header is authoritative for the environment.
RunConfig config_for_episode_file(const CommonOptions& common, const EnvConfig& env) {
  CommonOptions adjusted = common;
  adjusted.mode = env.action_space == ActionSpace::kDiscrete ? "discrete" : "continuous";
  RunConfig config = make_run_config(adjusted);
  config.env = env;
  config.validate();
  return config;
}

int run_demo(const CommonOptions& common, int count, std::uint64_t seed,
             const std::string& out_path) {
  RunConfig config = make_run_config(common);
  config.seed = seed;
  KinSim sim{config.env};
  EpisodeSet set;
  set.env = config.env;
  for (int i = 0; i < count; ++i) {
    set.episodes.push_back(scripted_demo(sim, seed + static_cast<std::uint64_t>(i)));
  }
  save_episodes(out_path, set);
  log(LogLevel::kInfo, "wrote %d demonstration episode(s) to %s", count, out_path.c_str());
  return kExitOk;
}

int run_segment(const CommonOptions& common, const std::string& in_path,
                const std::string& out_path, int margin_override) {
  EpisodeSet set = load_episodes(in_path);
  RunConfig config = config_for_episode_file(common, set.env);
  const int margin = margin_override >= 0 ? margin_override : config.phase_margin;
  for (Episode& ep : set.episodes) {
    ep.phase_boundary = segment_by_height(ep, set.env.l_z, set.env.delta_xyz, margin);
  }
  save_episodes(out_path, set);
  log(LogLevel::kInfo, "annotated %zu episode(s) with H_p", set.episodes.size());
  return kExitOk;
}

int run_augment(const CommonOptions& common, const std::string& in_path,
                const std::string& out_path, std::uint64_t seed, int per_demo_override) {
  const EpisodeSet input = load_episodes(in_path);
  RunConfig config = config_for_episode_file(common, input.env);
  if (per_demo_override >= 0) config.policy.augmentations_per_demo = per_demo_override;
  config.validate();

  Rng rng(seed);
  EpisodeSet output;
  output.env = config.env;
  for (std::size_t i = 0; i < input.episodes.size(); ++i) {
    const Episode& demo = input.episodes[i];
    const int h_p = demo.phase_boundary ? *demo.phase_boundary
                                        : segment_by_height(demo, config.env.l_z,
                                                            config.env.delta_xyz,
                                                            config.phase_margin);
    for (int copy = 0; copy < config.policy.augmentations_per_demo; ++copy) {
      Episode aug = augment_episode(demo, h_p, config.policy, config.env, rng);
      aug.source_episode = static_cast<int>(i);
      if (config.policy.isometric_overlay) {
        for (int k = 0; k < config.policy.isometric_overlay->copies; ++k) {
          const double angle =
              config.policy.isometric_overlay->group == IsometricOverlayConfig::Group::kC4
                  ? 0.5 * kPi * static_cast<double>(rng.uniform_index(4))
                  : rng.uniform(0.0, kTwoPi);
          Episode overlaid = apply_isometric_overlay(aug, RotationAngle{angle});
          overlaid.source_episode = static_cast<int>(i);
          output.episodes.push_back(std::move(overlaid));
        }
      }
      output.episodes.push_back(std::move(aug));
    }
  }
  save_episodes(out_path, output);
  log(LogLevel::kInfo, "wrote %zu augmented episode(s) to %s", output.episodes.size(),
      out_path.c_str());
  return kExitOk;
}

int run_verify(const std::string& gt_path, const std::string& aug_path, double tolerance) {
  const EpisodeSet gt = load_episodes(gt_path);
  const EpisodeSet aug = load_episodes(aug_path);
  KinSim sim{aug.env};

  std::size_t feasible = 0;
  std::size_t conditions_ok = 0;
  std::size_t conditions_checked = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < aug.episodes.size(); ++i) {
    const Episode& ep = aug.episodes[i];
    if (!ep.initial_state) {
      throw ValidationError("episode " + std::to_string(i) + " carries no initial state");
    }
    const SimState s0 = sim.state_from_snapshot(*ep.initial_state);
    const FeasibilityReport report = sim.replay_check(ep, s0, tolerance);
    feasible += report.feasible ? 1 : 0;
    worst = std::max(worst, report.max_obs_discrepancy);
    if (!report.feasible) {
      std::printf("episode %zu: INFEASIBLE (max obs discrepancy %.3g, first mismatch %d)\n", i,
                  report.max_obs_discrepancy,
                  report.first_mismatch_step ? *report.first_mismatch_step : -999);
    }

    if (ep.source_episode && *ep.source_episode >= 0 &&
        *ep.source_episode < static_cast<int>(gt.episodes.size())) {
      const Episode& source = gt.episodes[*ep.source_episode];
      if (source.initial_state && source.horizon() == ep.horizon() &&
          !ep.isometric_angle.has_value()) {
        const SimState s0_gt = sim.state_from_snapshot(*source.initial_state);
        const ConditionReport conditions =
            verify_multigroup_conditions(source, ep, sim, s0_gt, s0, tolerance);
        ++conditions_checked;
        conditions_ok += conditions.all() ? 1 : 0;
        if (!conditions.all()) {
          std::printf("episode %zu: conditions 6a=%d 6b=%d 6c=%d 6d=%d\n", i,
                      conditions.transition_consistent, conditions.reward_invariant,
                      conditions.observation_consistent, conditions.initial_state_in_support);
        }
      }
    }
  }

  std::printf("feasible: %zu/%zu (%.1f%%), max obs discrepancy %.3g\n", feasible,
              aug.episodes.size(),
              aug.episodes.empty() ? 0.0 : 100.0 * feasible / aug.episodes.size(), worst);
  if (conditions_checked > 0) {
    std::printf("multi-group conditions: %zu/%zu pass\n", conditions_ok, conditions_checked);
  }
  const bool all_ok = feasible == aug.episodes.size() && conditions_ok == conditions_checked;
  return all_ok ? kExitOk : kExitValidation;
}

int run_project(const CommonOptions& common, const std::string& in_path,
                const std::string& out_dir, int episode_filter) {
  const EpisodeSet set = load_episodes(in_path);
  RunConfig config = config_for_episode_file(common, set.env);
  std::filesystem::create_directories(out_dir);
  std::size_t files = 0;
  for (std::size_t e = 0; e < set.episodes.size(); ++e) {
    if (episode_filter >= 0 && static_cast<int>(e) != episode_filter) continue;
    const Episode& ep = set.episodes[e];
    for (std::size_t t = 0; t < ep.transitions.size(); ++t) {
      const std::vector<DepthImage> channels =
          render_observation(ep.transitions[t].observation, config.rl.view);
      for (std::size_t c = 0; c < channels.size(); ++c) {
        const std::string name =
            std::to_string(e) + "_" + std::to_string(t) + "_" + std::to_string(c) + ".pgm";
        write_pgm((std::filesystem::path(out_dir) / name).string(), channels[c]);
        ++files;
      }
    }
  }
  log(LogLevel::kInfo, "wrote %zu PGM file(s) to %s", files, out_dir.c_str());
  return kExitOk;
}

int run_train(const CommonOptions& common, const std::vector<std::string>& in_paths,
              std::uint64_t seed, const std::string& model_path, const std::string& csv_path,
              const std::string& svg_path, const std::string& summary_path) {
  EpisodeSet set = load_episodes(in_paths.front());
  for (std::size_t i = 1; i < in_paths.size(); ++i) {
    EpisodeSet more = load_episodes(in_paths[i]);
    for (Episode& ep : more.episodes) set.episodes.push_back(std::move(ep));
  }
  RunConfig config = config_for_episode_file(common, set.env);
  KinSim sim{config.env};

  ReplayBuffer buffer({}, {.num_objects = config.env.num_objects, .h_max = config.env.h_max});
  for (const Episode& ep : set.episodes) buffer.append(ep);

  Rng rng(seed);
  const auto [model, curve] = train_q(buffer, sim, config.rl, rng);
  save_model(model_path, model);
  if (!csv_path.empty()) write_curve_csv(csv_path, curve);
  if (!svg_path.empty()) write_curve_svg(svg_path, curve);
  if (!summary_path.empty()) write_episode_summaries(summary_path, set.episodes);

  if (!curve.points.empty()) {
    std::printf("final success rate: %.3f\n", curve.points.back().success_rate);
    const auto improvement = improvement_timestep(curve);
    if (improvement) {
      std::printf("improvement timestep: %d\n", *improvement);
    } else {
      std::printf("improvement timestep: none\n");
    }
  }
  return kExitOk;
}

int run_eval(const CommonOptions& common, const std::string& model_path,
             const std::string& env_path, int rollouts, std::uint64_t seed,
             const std::string& out_csv) {
  const EpisodeSet set = load_episodes(env_path);
  RunConfig config = config_for_episode_file(common, set.env);
  KinSim sim{config.env};
  const QModel model = load_model(model_path);

  std::ofstream out(out_csv);
  if (!out) throw IoError("cannot open for writing: " + out_csv);
  out << "rollout,success,H,score\n";
  int successes = 0;
  double score_sum = 0.0;
  char line[96];
  for (int r = 0; r < rollouts; ++r) {
    const RolloutResult result =
        evaluate_rollout(sim, model, config.rl, seed + static_cast<std::uint64_t>(r));
    successes += result.success ? 1 : 0;
    score_sum += result.score;
    std::snprintf(line, sizeof(line), "%d,%d,%d,%.17g\n", r, result.success ? 1 : 0, result.steps,
                  result.score);
    out << line;
  }
  if (!out) throw IoError("write failed: " + out_csv);
  std::printf("success rate: %.3f, mean score: %.3f\n",
              static_cast<double>(successes) / rollouts, score_sum / rollouts);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-group equivariant augmentation pipeline for a desk-scale pick task"};
  app.require_subcommand(1);
  app.fallthrough(true);  // let --config/--set appear after the subcommand

  CommonOptions common;
  app.add_option("--config", common.config_path, "flat key=value config file");
  app.add_option("--set", common.overrides, "config override, key=value (repeatable)");

  auto* demo = app.add_subcommand("demo", "generate scripted demonstration episodes");
  int demo_count = 1;
  std::uint64_t demo_seed = 0;
  std::string demo_out;
  demo->add_option("--n", demo_count, "number of episodes")->check(CLI::PositiveNumber);
  demo->add_option("--seed", demo_seed, "random seed")->required();
  demo->add_option("--out", demo_out, "output JSONL path")->required();
  demo->add_option("--mode", common.mode, "continuous|discrete");

  auto* segment = app.add_subcommand("segment", "annotate episodes with the phase boundary H_p");
  std::string segment_in, segment_out;
  int segment_margin = -1;
  segment->add_option("--in", segment_in, "input JSONL path")->required();
  segment->add_option("--out", segment_out, "output JSONL path")->required();
  segment->add_option("--margin", segment_margin, "conservative margin in steps");

  auto* augment = app.add_subcommand("augment", "multi-group augmentation of demonstrations");
  std::string augment_in, augment_out;
  std::uint64_t augment_seed = 0;
  int per_demo = -1;
  augment->add_option("--in", augment_in, "input JSONL path")->required();
  augment->add_option("--out", augment_out, "output JSONL path")->required();
  augment->add_option("--seed", augment_seed, "random seed")->required();
  augment->add_option("--per-demo", per_demo, "augmented episodes per demonstration");
  augment->add_option("--mode", common.mode, "continuous|discrete policy defaults");

  auto* verify = app.add_subcommand("verify", "replay and multi-group condition checks");
  std::string verify_gt, verify_aug;
  double verify_tolerance = kReplayTol;
  verify->add_option("--gt", verify_gt, "ground-truth JSONL path")->required();
  verify->add_option("--aug", verify_aug, "augmented JSONL path")->required();
  verify->add_option("--tolerance", verify_tolerance, "observation tolerance");

  auto* project = app.add_subcommand("project", "export orthographic depth channels as PGM");
  std::string project_in, project_dir;
  int project_episode = -1;
  project->add_option("--in", project_in, "input JSONL path")->required();
  project->add_option("--out-dir", project_dir, "output directory")->required();
  project->add_option("--episode", project_episode, "only this episode index");

  auto* train = app.add_subcommand("train", "offline Q-learning on an episode buffer");
  std::vector<std::string> train_in;
  std::string train_model, train_csv, train_svg, train_summary;
  std::uint64_t train_seed = 0;
  train->add_option("--in", train_in, "input JSONL path (repeatable; buffers concatenate)")
      ->required();
  train->add_option("--seed", train_seed, "random seed")->required();
  train->add_option("--out-model", train_model, "model JSON path")->required();
  train->add_option("--out-csv", train_csv, "evaluation curve CSV path");
  train->add_option("--out-svg", train_svg, "evaluation curve SVG path");
  train->add_option("--out-summary", train_summary, "episode summary CSV path");

  auto* eval = app.add_subcommand("eval", "evaluate a trained model in the simulator");
  std::string eval_model, eval_env, eval_csv;
  int eval_rollouts = 20;
  std::uint64_t eval_seed = 0;
  eval->add_option("--model", eval_model, "model JSON path")->required();
  eval->add_option("--env-from", eval_env, "JSONL file providing the environment header")
      ->required();
  eval->add_option("--rollouts", eval_rollouts, "number of rollouts")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "base rollout seed");
  eval->add_option("--out", eval_csv, "per-rollout CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (demo->parsed()) return run_demo(common, demo_count, demo_seed, demo_out);
    if (segment->parsed()) return run_segment(common, segment_in, segment_out, segment_margin);
    if (augment->parsed()) {
      return run_augment(common, augment_in, augment_out, augment_seed, per_demo);
    }
    if (verify->parsed()) return run_verify(verify_gt, verify_aug, verify_tolerance);
    if (project->parsed()) return run_project(common, project_in, project_dir, project_episode);
    if (train->parsed()) {
      return run_train(common, train_in, train_seed, train_model, train_csv, train_svg,
                       train_summary);
    }
    if (eval->parsed()) {
      return run_eval(common, eval_model, eval_env, eval_rollouts, eval_seed, eval_csv);
    }
  } catch (const IoError& err) {
    std::fprintf(stderr, "io error: %s\n", err.what());
    return kExitIo;
  } catch (const ValidationError& err) {
    std::fprintf(stderr, "validation error: %s\n", err.what());
    return kExitValidation;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitValidation;
  }
  return kExitUsage;
}
