#include "mea/episode_io.hpp"

#include <fstream>
#include <json.hpp>

#include "mea/errors.hpp"

namespace mea {
namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json cloud_to_json(const PointCloud& cloud) {
  json arr = json::array();
  for (const Vec3& p : cloud.points) arr.push_back(vec3_to_json(p));
  return arr;
}

PointCloud cloud_from_json(const json& j) {
  PointCloud cloud;
  cloud.points.reserve(j.size());
  for (const json& p : j) cloud.points.push_back(vec3_from_json(p));
  return cloud;
}

json pose_to_json(const BodyPose& pose) {
  return json{{"position", vec3_to_json(pose.position)}, {"yaw", pose.yaw}};
}

BodyPose pose_from_json(const json& j) {
  return BodyPose{vec3_from_json(j.at("position")), j.at("yaw").get<double>()};
}

json env_to_json(const EnvConfig& env) {
  return json{
      {"schema_version", kSchemaVersion},
      {"M", env.num_objects},
      {"delta_xyz", env.delta_xyz},
      {"delta_theta", env.delta_theta},
      {"H_max", env.h_max},
      {"L_z", env.l_z},
      {"workspace", json{{"lo", vec3_to_json(env.workspace.lo)},
                         {"hi", vec3_to_json(env.workspace.hi)}}},
      {"capture_radius", env.capture_radius},
      {"lift_height", env.lift_height},
      {"points_per_segment", env.points_per_segment},
      {"object_width", env.object_width},
      {"object_height", env.object_height},
      {"spawn_z_min", env.spawn_z_min},
      {"spawn_z_max", env.spawn_z_max},
      {"action_space", env.action_space == ActionSpace::kDiscrete ? "discrete" : "continuous"},
      {"jaw_close", env.jaw_close},
      {"jaw_open", env.jaw_open},
  };
}

EnvConfig env_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion) {
    throw ValidationError("unsupported schema_version " + j.at("schema_version").dump() +
                          "; this build reads version " + std::to_string(kSchemaVersion));
  }
  EnvConfig env;
  env.num_objects = j.at("M").get<int>();
  env.delta_xyz = j.at("delta_xyz").get<double>();
  env.delta_theta = j.at("delta_theta").get<double>();
  env.h_max = j.at("H_max").get<int>();
  env.l_z = j.at("L_z").get<double>();
  env.workspace.lo = vec3_from_json(j.at("workspace").at("lo"));
  env.workspace.hi = vec3_from_json(j.at("workspace").at("hi"));
  env.capture_radius = j.at("capture_radius").get<double>();
  env.lift_height = j.at("lift_height").get<double>();
  env.points_per_segment = j.at("points_per_segment").get<int>();
  env.object_width = j.at("object_width").get<double>();
  env.object_height = j.at("object_height").get<double>();
  env.spawn_z_min = j.at("spawn_z_min").get<double>();
  env.spawn_z_max = j.at("spawn_z_max").get<double>();
  env.action_space = j.at("action_space").get<std::string>() == "discrete"
                         ? ActionSpace::kDiscrete
                         : ActionSpace::kContinuous;
  env.jaw_close = j.at("jaw_close").get<double>();
  env.jaw_open = j.at("jaw_open").get<double>();
  env.validate();
  return env;
}

json group_element_to_json(const GroupElement& g) {
  if (g.discrete_c4) return json{{"c4", *g.discrete_c4}};
  return json{{"delta_r", g.delta_r},
              {"delta_z", g.delta_z},
              {"delta_rot", g.delta_rot},
              {"delta_theta", g.delta_theta}};
}

GroupElement group_element_from_json(const json& j) {
  if (j.contains("c4")) return GroupElement::c4(j.at("c4").get<int>());
  return GroupElement::continuous(j.at("delta_r").get<double>(), j.at("delta_z").get<double>(),
                                  j.at("delta_rot").get<double>(),
                                  j.at("delta_theta").get<double>());
}

json episode_start_to_json(const Episode& ep, int index) {
  json record{{"episode", index}, {"origin", to_string(ep.origin)}};
  if (ep.phase_boundary) record["H_p"] = *ep.phase_boundary;
  if (ep.initial_state) {
    const SceneSnapshot& snap = *ep.initial_state;
    json objects = json::array();
    for (const BodyPose& pose : snap.objects) objects.push_back(pose_to_json(pose));
    json movable = json::array();
    for (bool flag : snap.movable) movable.push_back(flag);
    record["initial_state"] = json{{"gripper", pose_to_json(snap.gripper)},
                                   {"jaw", snap.jaw},
                                   {"objects", objects},
                                   {"movable", movable}};
  }
  if (ep.group_sequence) {
    json seq = json::array();
    for (const GroupElement& g : *ep.group_sequence) seq.push_back(group_element_to_json(g));
    record["group_sequence"] = seq;
  }
  if (ep.isometric_angle) record["isometric_angle"] = *ep.isometric_angle;
  if (ep.source_episode) record["source_episode"] = *ep.source_episode;
  return record;
}

json transition_to_json(const Transition& tr, int t) {
  return json{
      {"t", t},
      {"action", json::array({tr.action.xyz.x(), tr.action.xyz.y(), tr.action.xyz.z(),
                              tr.action.theta, tr.action.jaw})},
      {"reward", tr.reward},
      {"terminal", tr.terminal},
      {"jaw_obs", tr.observation.jaw},
      {"gripper_cloud", cloud_to_json(tr.observation.gripper_cloud)},
      {"object_clouds",
       [&] {
         json arr = json::array();
         for (const PointCloud& cloud : tr.observation.object_clouds) {
           arr.push_back(cloud_to_json(cloud));
         }
         return arr;
       }()},
  };
}

Transition transition_from_json(const json& j) {
  Transition tr;
  const json& action = j.at("action");
  if (!action.is_array() || action.size() != 5) {
    throw ValidationError("action must be a 5-element array");
  }
  tr.action.xyz = Vec3(action[0].get<double>(), action[1].get<double>(), action[2].get<double>());
  tr.action.theta = action[3].get<double>();
  tr.action.jaw = action[4].get<double>();
  tr.reward = j.at("reward").get<double>();
  tr.terminal = j.at("terminal").get<bool>();
  tr.observation.jaw = j.at("jaw_obs").get<double>();
  tr.observation.gripper_cloud = cloud_from_json(j.at("gripper_cloud"));
  for (const json& cloud : j.at("object_clouds")) {
    tr.observation.object_clouds.push_back(cloud_from_json(cloud));
  }
  return tr;
}

}  // namespace

void save_episodes(const std::string& path, const EpisodeSet& set) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << env_to_json(set.env).dump() << '\n';
  for (std::size_t i = 0; i < set.episodes.size(); ++i) {
    const Episode& ep = set.episodes[i];
    out << episode_start_to_json(ep, static_cast<int>(i)).dump() << '\n';
    for (std::size_t t = 0; t < ep.transitions.size(); ++t) {
      out << transition_to_json(ep.transitions[t], static_cast<int>(t)).dump() << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

EpisodeSet load_episodes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);

  EpisodeSet set;
  ValidationOptions opts;
  std::string line;
  int line_number = 0;
  bool in_episode = false;
  Episode current;
  int expected_t = 0;

  auto flush = [&] {
    if (!in_episode) return;
    try {
      validate_episode(current, opts);
    } catch (const ValidationError& err) {
      throw ParseError(std::string("episode invariant violated: ") + err.what(), line_number);
    }
    set.episodes.push_back(std::move(current));
    current = Episode{};
    in_episode = false;
  };

  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& err) {
      throw ParseError(std::string("malformed record: ") + err.what(), line_number);
    }
    try {
      if (line_number == 1) {
        set.env = env_from_json(record);
        opts.num_objects = set.env.num_objects;
        opts.h_max = set.env.h_max;
        continue;
      }
      if (record.contains("episode")) {
        flush();
        in_episode = true;
        expected_t = 0;
        current.origin = origin_from_string(record.at("origin").get<std::string>());
        if (record.contains("H_p")) current.phase_boundary = record.at("H_p").get<int>();
        if (record.contains("initial_state")) {
          const json& js = record.at("initial_state");
          SceneSnapshot snap;
          snap.gripper = pose_from_json(js.at("gripper"));
          snap.jaw = js.at("jaw").get<double>();
          for (const json& pose : js.at("objects")) snap.objects.push_back(pose_from_json(pose));
          for (const json& flag : js.at("movable")) snap.movable.push_back(flag.get<bool>());
          current.initial_state = std::move(snap);
        }
        if (record.contains("group_sequence")) {
          std::vector<GroupElement> seq;
          for (const json& g : record.at("group_sequence")) {
            seq.push_back(group_element_from_json(g));
          }
          current.group_sequence = std::move(seq);
        }
        if (record.contains("isometric_angle")) {
          current.isometric_angle = record.at("isometric_angle").get<double>();
        }
        if (record.contains("source_episode")) {
          current.source_episode = record.at("source_episode").get<int>();
        }
      } else if (record.contains("t")) {
        if (!in_episode) {
          throw ValidationError("transition record before any episode-start record");
        }
        if (record.at("t").get<int>() != expected_t) {
          throw ValidationError("transition index " + record.at("t").dump() +
                                " does not follow t=" + std::to_string(expected_t - 1));
        }
        current.transitions.push_back(transition_from_json(record));
        ++expected_t;
      } else {
        throw ValidationError("record is neither an episode start nor a transition");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const json::exception& err) {
      throw ParseError(std::string("malformed record: ") + err.what(), line_number);
    } catch (const ValidationError& err) {
      throw ParseError(err.what(), line_number);
    }
  }
  if (line_number == 0) throw ParseError("empty file: a header record is required", 1);
  flush();
  return set;
}

void write_episode_summaries(const std::string& path, const std::vector<Episode>& episodes) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "t,H,success,origin\n";
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const Episode& ep = episodes[i];
    const int success = ep.transitions.empty() ? 0 : (ep.transitions.back().reward == 1.0 ? 1 : 0);
    out << i << ',' << ep.horizon() << ',' << success << ',' << to_string(ep.origin) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace mea
