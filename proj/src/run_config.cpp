#include "mea/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mea/errors.hpp"

namespace mea {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  const double parsed = std::stod(v, &used);
  if (used != v.size()) throw ValidationError("not a number: " + v);
  return parsed;
}

int to_int(const std::string& v) {
  std::size_t used = 0;
  const int parsed = std::stoi(v, &used);
  if (used != v.size()) throw ValidationError("not an integer: " + v);
  return parsed;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("not a boolean: " + v);
}

}  // namespace

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"seed", [](RunConfig& r, const std::string& v) { r.seed = std::stoull(v); }},
      {"phase_margin", [](RunConfig& r, const std::string& v) { r.phase_margin = to_int(v); }},

      {"env.delta_xyz", [](RunConfig& r, const std::string& v) { r.env.delta_xyz = to_double(v); }},
      {"env.delta_theta",
       [](RunConfig& r, const std::string& v) { r.env.delta_theta = to_double(v); }},
      {"env.h_max", [](RunConfig& r, const std::string& v) { r.env.h_max = to_int(v); }},
      {"env.l_z", [](RunConfig& r, const std::string& v) { r.env.l_z = to_double(v); }},
      {"env.m", [](RunConfig& r, const std::string& v) { r.env.num_objects = to_int(v); }},
      {"env.capture_radius",
       [](RunConfig& r, const std::string& v) { r.env.capture_radius = to_double(v); }},
      {"env.lift_height",
       [](RunConfig& r, const std::string& v) { r.env.lift_height = to_double(v); }},
      {"env.points_per_segment",
       [](RunConfig& r, const std::string& v) { r.env.points_per_segment = to_int(v); }},
      {"env.object_width",
       [](RunConfig& r, const std::string& v) { r.env.object_width = to_double(v); }},
      {"env.object_height",
       [](RunConfig& r, const std::string& v) { r.env.object_height = to_double(v); }},
      {"env.spawn_z_min",
       [](RunConfig& r, const std::string& v) { r.env.spawn_z_min = to_double(v); }},
      {"env.spawn_z_max",
       [](RunConfig& r, const std::string& v) { r.env.spawn_z_max = to_double(v); }},
      {"env.workspace_xy",
       [](RunConfig& r, const std::string& v) {
         const double half = to_double(v);
         r.env.workspace.lo.x() = -half;
         r.env.workspace.lo.y() = -half;
         r.env.workspace.hi.x() = half;
         r.env.workspace.hi.y() = half;
       }},
      {"env.action_space",
       [](RunConfig& r, const std::string& v) {
         if (v == "continuous") {
           r.env.action_space = ActionSpace::kContinuous;
         } else if (v == "discrete") {
           r.env.action_space = ActionSpace::kDiscrete;
         } else {
           throw ValidationError("env.action_space must be continuous or discrete");
         }
       }},

      {"aug.mode",
       [](RunConfig& r, const std::string& v) {
         if (v == "continuous") {
           r.policy.mode = AugmentationPolicy::Mode::kContinuous;
         } else if (v == "discrete") {
           r.policy.mode = AugmentationPolicy::Mode::kDiscrete;
         } else {
           throw ValidationError("aug.mode must be continuous or discrete");
         }
       }},
      {"aug.per_demo",
       [](RunConfig& r, const std::string& v) { r.policy.augmentations_per_demo = to_int(v); }},
      {"aug.delta_r_lo",
       [](RunConfig& r, const std::string& v) { r.policy.delta_r_range.lo = to_double(v); }},
      {"aug.delta_r_hi",
       [](RunConfig& r, const std::string& v) { r.policy.delta_r_range.hi = to_double(v); }},
      {"aug.delta_z_lo",
       [](RunConfig& r, const std::string& v) { r.policy.delta_z_range.lo = to_double(v); }},
      {"aug.delta_z_hi",
       [](RunConfig& r, const std::string& v) { r.policy.delta_z_range.hi = to_double(v); }},
      {"aug.delta_rot_lo",
       [](RunConfig& r, const std::string& v) { r.policy.delta_rot_range.lo = to_double(v); }},
      {"aug.delta_rot_hi",
       [](RunConfig& r, const std::string& v) { r.policy.delta_rot_range.hi = to_double(v); }},
      {"aug.delta_theta_lo",
       [](RunConfig& r, const std::string& v) { r.policy.delta_theta_range.lo = to_double(v); }},
      {"aug.delta_theta_hi",
       [](RunConfig& r, const std::string& v) { r.policy.delta_theta_range.hi = to_double(v); }},
      {"aug.trivial_prob",
       [](RunConfig& r, const std::string& v) { r.policy.discrete_trivial_prob = to_double(v); }},
      {"aug.radial_mode",
       [](RunConfig& r, const std::string& v) {
         if (v == "direction-preserving") {
           r.policy.radial_mode = AugmentationPolicy::RadialMode::kDirectionPreserving;
         } else if (v == "literal-eq17") {
           r.policy.radial_mode = AugmentationPolicy::RadialMode::kLiteralElementwise;
         } else {
           throw ValidationError("aug.radial_mode must be direction-preserving or literal-eq17");
         }
       }},
      {"aug.max_retries",
       [](RunConfig& r, const std::string& v) { r.policy.max_resample_retries = to_int(v); }},
      {"aug.isometric",
       [](RunConfig& r, const std::string& v) {
         if (v == "off") {
           r.policy.isometric_overlay.reset();
         } else if (v == "so2") {
           r.policy.isometric_overlay = IsometricOverlayConfig{IsometricOverlayConfig::Group::kSO2};
         } else if (v == "c4") {
           r.policy.isometric_overlay = IsometricOverlayConfig{IsometricOverlayConfig::Group::kC4};
         } else {
           throw ValidationError("aug.isometric must be off, so2, or c4");
         }
       }},
      {"aug.isometric_copies",
       [](RunConfig& r, const std::string& v) {
         if (!r.policy.isometric_overlay) {
           throw ValidationError("aug.isometric_copies requires aug.isometric");
         }
         r.policy.isometric_overlay->copies = to_int(v);
       }},

      {"rl.gamma", [](RunConfig& r, const std::string& v) { r.rl.gamma = to_double(v); }},
      {"rl.learning_rate",
       [](RunConfig& r, const std::string& v) { r.rl.learning_rate = to_double(v); }},
      {"rl.updates", [](RunConfig& r, const std::string& v) { r.rl.updates = to_int(v); }},
      {"rl.batch_size", [](RunConfig& r, const std::string& v) { r.rl.batch_size = to_int(v); }},
      {"rl.eval_every", [](RunConfig& r, const std::string& v) { r.rl.eval_every = to_int(v); }},
      {"rl.eval_rollouts",
       [](RunConfig& r, const std::string& v) { r.rl.eval_rollouts = to_int(v); }},
      {"rl.coarse_bins", [](RunConfig& r, const std::string& v) { r.rl.coarse_bins = to_int(v); }},
      {"rl.eval_seed",
       [](RunConfig& r, const std::string& v) { r.rl.eval_seed = std::stoull(v); }},
      {"rl.n_voxel", [](RunConfig& r, const std::string& v) { r.rl.view.n_voxel = to_int(v); }},
      {"rl.view_half_extent",
       [](RunConfig& r, const std::string& v) {
         const double half = to_double(v);
         r.rl.view.workspace.lo = Vec3(-half, -half, -half);
         r.rl.view.workspace.hi = Vec3(half, half, half);
       }},
  };

  const auto it = setters.find(key);
  if (it == setters.end()) throw ValidationError("unknown config key: " + key);
  try {
    it->second(c, value);
  } catch (const std::invalid_argument&) {
    throw ValidationError("bad value for " + key + ": " + value);
  } catch (const std::out_of_range&) {
    throw ValidationError("value out of range for " + key + ": " + value);
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected `key = value`", line_number);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_config_entry(config, key, value);
    } catch (const ValidationError& err) {
      throw ParseError(err.what(), line_number);
    }
  }
}

}  // namespace mea
