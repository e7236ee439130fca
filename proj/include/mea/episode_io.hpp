#pragma once

#include <string>
#include <vector>

#include "mea/env_config.hpp"
#include "mea/trajectory.hpp"

namespace mea {

/// An episode file: the environment configuration block plus its episodes.
struct EpisodeSet {
  EnvConfig env;
  std::vector<Episode> episodes;
};

/// JSON-lines format, one record per line:
///   line 1             header {schema_version, M, delta_xyz, delta_theta,
///                      H_max, L_z, workspace, ...remaining env fields}
///   episode start      {episode, origin, H_p?, initial_state?,
///                      group_sequence?, isometric_angle?}
///   transition         {t, action:[x,y,z,theta,jaw], reward, terminal,
///                      jaw_obs, gripper_cloud:[[x,y,z]...],
///                      object_clouds:[[[x,y,z]...]...]}
/// Floating-point values round-trip exactly.
void save_episodes(const std::string& path, const EpisodeSet& set);

/// Throws ParseError (with the offending line number) on malformed records,
/// a schema-version mismatch, or invariant violations; IoError when the file
/// cannot be opened.
EpisodeSet load_episodes(const std::string& path);

/// Per-episode summary CSV with columns t,H,success,origin.
void write_episode_summaries(const std::string& path, const std::vector<Episode>& episodes);

}  // namespace mea
