#include "planlab/scene.hpp"

#include <fstream>
#include <stdexcept>

namespace planlab {

std::string tag_name(SceneTag tag) {
  switch (tag) {
    case SceneTag::straight: return "straight";
    case SceneTag::turn: return "turn";
    case SceneTag::multi_modal: return "multi_modal";
  }
  throw std::logic_error("bad scene tag");
}

SceneTag tag_from_name(const std::string& name) {
  if (name == "straight") return SceneTag::straight;
  if (name == "turn") return SceneTag::turn;
  if (name == "multi_modal") return SceneTag::multi_modal;
  throw std::invalid_argument("unknown scene tag: " + name);
}

namespace {

nlohmann::json points_to_json(const std::vector<Vec2>& pts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : pts) arr.push_back({p.x(), p.y()});
  return arr;
}

std::vector<Vec2> points_from_json(const nlohmann::json& arr) {
  std::vector<Vec2> pts;
  pts.reserve(arr.size());
  for (const auto& p : arr) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return pts;
}

}  // namespace

nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json j;
  j["tag"] = tag_name(scene.tag);
  j["seed"] = scene.seed;
  j["drivable"] = points_to_json(scene.drivable.v);
  j["centerline"] = points_to_json(scene.centerline.points());
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : scene.agents) {
    agents.push_back({{"pos", {a.pos.x(), a.pos.y()}},
                      {"vel", {a.vel.x(), a.vel.y()}},
                      {"radius", a.radius}});
  }
  j["agents"] = agents;
  j["ego_radius"] = scene.ego_radius;
  j["ego_speed"] = scene.ego_speed;
  j["expert"] = trajectory_to_json(scene.expert);
  return j;
}

Scene scene_from_json(const nlohmann::json& j) {
  Scene s;
  s.tag = tag_from_name(j.at("tag").get<std::string>());
  s.seed = j.at("seed").get<uint64_t>();
  s.drivable.v = points_from_json(j.at("drivable"));
  s.centerline = Polyline(points_from_json(j.at("centerline")));
  for (const auto& a : j.at("agents")) {
    Agent agent;
    agent.pos = Vec2(a.at("pos").at(0).get<double>(), a.at("pos").at(1).get<double>());
    agent.vel = Vec2(a.at("vel").at(0).get<double>(), a.at("vel").at(1).get<double>());
    agent.radius = a.at("radius").get<double>();
    s.agents.push_back(agent);
  }
  s.ego_radius = j.at("ego_radius").get<double>();
  s.ego_speed = j.at("ego_speed").get<double>();
  s.expert = trajectory_from_json(j.at("expert"));
  return s;
}

void save_scenes_jsonl(const std::vector<Scene>& scenes, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  for (const auto& s : scenes) os << scene_to_json(s).dump() << '\n';
}

std::vector<Scene> load_scenes_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  std::vector<Scene> scenes;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    scenes.push_back(scene_from_json(nlohmann::json::parse(line)));
  }
  return scenes;
}

}  // namespace planlab
