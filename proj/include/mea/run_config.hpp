#pragma once

#include <cstdint>
#include <string>

#include "mea/augment.hpp"
#include "mea/env_config.hpp"
#include "mea/errors.hpp"
#include "mea/qlearn.hpp"

namespace mea {

/// Everything a pipeline run needs: environment, augmentation policy,
/// learner settings, and the phase-segmentation margin.
struct RunConfig {
  EnvConfig env;
  AugmentationPolicy policy;
  RlConfig rl;
  int phase_margin = 1;
  std::uint64_t seed = 0;

  /// Validates every block before any work starts.
  void validate() const {
    env.validate();
    policy.validate();
    rl.validate();
    if (phase_margin < 0) throw ValidationError("phase_margin must be non-negative");
  }
};

/// Applies a flat key-value config file (lines of `section.key = value`,
/// `#` comments) on top of the current values. Unknown keys are errors.
void apply_config_file(RunConfig& config, const std::string& path);

/// Applies a single `section.key = value` assignment.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace mea
