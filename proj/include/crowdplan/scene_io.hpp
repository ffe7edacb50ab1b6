#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdplan/scene.hpp"

namespace crowdplan {

inline constexpr const char* kScenesSchema = "scenes-v1";

nlohmann::json trajectory_points_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j, double dt);

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

// Line-delimited scene file: a header record {"schema": "scenes-v1", ...}
// followed by one scene object per line.
void write_scenes(std::ostream& out, const std::vector<Scene>& scenes,
                  const nlohmann::json& header_extra = nlohmann::json::object());
std::vector<Scene> read_scenes(std::istream& in);

void save_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes,
                 const nlohmann::json& header_extra = nlohmann::json::object());
std::vector<Scene> load_scenes(const std::filesystem::path& path);

// Returns the header record of a scene file without parsing the scenes.
nlohmann::json load_scene_header(const std::filesystem::path& path);

}  // namespace crowdplan
