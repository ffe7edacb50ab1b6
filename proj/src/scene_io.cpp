#include "crowdplan/scene_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crowdplan {

using nlohmann::json;

json trajectory_points_to_json(const Trajectory& t) {
  json arr = json::array();
  for (Vec2 p : t.points) arr.push_back({p.x, p.y});
  return arr;
}

Trajectory trajectory_from_json(const json& j, double dt) {
  Trajectory t{{}, dt};
  t.points.reserve(j.size());
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw std::runtime_error("scene file: positions must be [x, y] pairs");
    t.points.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return t;
}

json scene_to_json(const Scene& scene) {
  json j;
  j["scene_id"] = scene.scene_id;
  j["dt"] = scene.dt();
  j["ego_history"] = trajectory_points_to_json(scene.ego_history);
  j["neighbor_histories"] = json::array();
  for (const auto& t : scene.neighbor_histories) j["neighbor_histories"].push_back(trajectory_points_to_json(t));
  j["ego_goal"] = {scene.ego_goal.x, scene.ego_goal.y};
  j["ego_future_gt"] = trajectory_points_to_json(scene.ego_future_gt);
  j["neighbor_futures_gt"] = json::array();
  for (const auto& t : scene.neighbor_futures_gt) j["neighbor_futures_gt"].push_back(trajectory_points_to_json(t));
  return j;
}

Scene scene_from_json(const json& j) {
  for (const char* key : {"scene_id", "dt", "ego_history", "neighbor_histories", "ego_goal", "ego_future_gt",
                          "neighbor_futures_gt"}) {
    if (!j.contains(key)) throw std::runtime_error(std::string("scene file: record missing key '") + key + "'");
  }
  const double dt = j.at("dt").get<double>();
  Scene s;
  s.scene_id = j.at("scene_id").get<std::string>();
  s.ego_history = trajectory_from_json(j.at("ego_history"), dt);
  for (const auto& t : j.at("neighbor_histories")) s.neighbor_histories.push_back(trajectory_from_json(t, dt));
  const auto& goal = j.at("ego_goal");
  s.ego_goal = {goal.at(0).get<double>(), goal.at(1).get<double>()};
  s.ego_future_gt = trajectory_from_json(j.at("ego_future_gt"), dt);
  for (const auto& t : j.at("neighbor_futures_gt")) s.neighbor_futures_gt.push_back(trajectory_from_json(t, dt));
  return s;
}

void write_scenes(std::ostream& out, const std::vector<Scene>& scenes, const json& header_extra) {
  json header = header_extra;
  header["schema"] = kScenesSchema;
  header["count"] = scenes.size();
  out << header.dump() << '\n';
  for (const auto& s : scenes) out << scene_to_json(s).dump() << '\n';
}

std::vector<Scene> read_scenes(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("scene file: empty input");
  const json header = json::parse(line);
  if (header.value("schema", "") != kScenesSchema)
    throw std::runtime_error("scene file: expected schema '" + std::string(kScenesSchema) + "'");
  std::vector<Scene> scenes;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    scenes.push_back(scene_from_json(json::parse(line)));
  }
  return scenes;
}

void save_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes, const json& header_extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scene file: " + path.string());
  write_scenes(out, scenes, header_extra);
  if (!out) throw std::runtime_error("failed writing scene file: " + path.string());
}

std::vector<Scene> load_scenes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read scene file: " + path.string());
  return read_scenes(in);
}

json load_scene_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read scene file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("scene file: empty input");
  return json::parse(line);
}

}  // namespace crowdplan
