#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "planlab/geometry.hpp"
#include "planlab/trajectory.hpp"

namespace planlab {

struct Agent {
  Vec2 pos;      // at t = 0, ego frame
  Vec2 vel;     // constant-velocity extrapolation
  double radius = 1.0;
};

enum class SceneTag { straight, turn, multi_modal };

std::string tag_name(SceneTag tag);
SceneTag tag_from_name(const std::string& name);

struct Scene {
  SceneTag tag = SceneTag::straight;
  uint64_t seed = 0;
  Polygon drivable;
  Polyline centerline;
  std::vector<Agent> agents;
  double ego_radius = 1.0;
  double ego_speed = 5.0;   // m/s at t = 0
  Trajectory expert;
};

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

// JSON-lines dataset, one scene per line.
void save_scenes_jsonl(const std::vector<Scene>& scenes, const std::string& path);
std::vector<Scene> load_scenes_jsonl(const std::string& path);

}  // namespace planlab
