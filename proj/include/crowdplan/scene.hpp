#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crowdplan/geometry.hpp"

namespace crowdplan {

struct Trajectory {
  std::vector<Vec2> points;
  double dt = 0.4;

  [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
  [[nodiscard]] const Vec2& back() const { return points.back(); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// One planning instance: observed histories, the ego goal and ground-truth
// futures. Index 0 of the crowd is always the ego agent.
struct Scene {
  std::string scene_id;
  Trajectory ego_history;
  std::vector<Trajectory> neighbor_histories;
  Vec2 ego_goal;
  Trajectory ego_future_gt;
  std::vector<Trajectory> neighbor_futures_gt;

  [[nodiscard]] std::size_t num_neighbors() const noexcept { return neighbor_histories.size(); }
  [[nodiscard]] std::size_t t_obs() const noexcept { return ego_history.size(); }
  [[nodiscard]] std::size_t t_fut() const noexcept { return ego_future_gt.size(); }
  [[nodiscard]] double dt() const noexcept { return ego_history.dt; }

  friend bool operator==(const Scene&, const Scene&) = default;
};

// Circle-crossing generator settings. Defaults follow the CrowdNav timing:
// 3.2 s of history and future at 2.5 FPS, one ego plus five neighbors.
struct SceneConfig {
  std::size_t num_agents = 6;
  std::size_t t_obs = 8;
  std::size_t t_fut = 8;
  double dt = 0.4;
  double arena_radius = 4.0;
  // Slack beyond the start circle that still counts as inside the arena.
  double arena_margin = 1.0;
  double speed_min = 0.5;
  double speed_max = 1.5;
  double heading_noise_std = 0.05;
  // Heading noise is truncated at this many standard deviations.
  double heading_noise_clip = 3.0;
  double min_start_separation = 1.0;
  // Each agent leaves the start circle uniformly 0..departure_stagger steps
  // before the observation window opens.
  std::size_t departure_stagger = 12;

  // Throws std::invalid_argument with a description of the first problem.
  void validate() const;
  [[nodiscard]] double arena_bound() const noexcept { return arena_radius + arena_margin; }
};

std::vector<Scene> generate_scenes(std::size_t count, const SceneConfig& config, std::uint64_t seed);

struct SceneVerdict {
  std::vector<std::string> failures;
  [[nodiscard]] bool ok() const noexcept { return failures.empty(); }
};

inline constexpr const char* kInvariantFinite = "all coordinates finite";
inline constexpr const char* kInvariantHistoryLength = "all histories share dt and length T_obs";
inline constexpr const char* kInvariantFutureLength = "all futures share length T_fut";
inline constexpr const char* kInvariantTrajectory = "trajectory length >= 1 and dt > 0";
inline constexpr const char* kInvariantArena = "last point of ego_future_gt lies within the arena bounds";
inline constexpr const char* kInvariantNeighborCount = "neighbor histories and futures have equal count";

// Checks every Scene invariant and reports each violated one by name.
SceneVerdict validate_scene(const Scene& scene, double arena_bound = SceneConfig{}.arena_bound());

// Rigid map from world coordinates into the ego frame:
// local = R(-rotation) * (world - translation).
struct FrameTransform {
  Vec2 translation;
  double rotation = 0.0;

  [[nodiscard]] Vec2 to_local(Vec2 world) const noexcept;
  [[nodiscard]] Vec2 to_world(Vec2 local) const noexcept;
  [[nodiscard]] Vec2 rotate_to_local(Vec2 v) const noexcept;
  [[nodiscard]] Vec2 rotate_to_world(Vec2 v) const noexcept;
  [[nodiscard]] Trajectory to_local(const Trajectory& t) const;
  [[nodiscard]] Trajectory to_world(const Trajectory& t) const;
};

// Moves the ego's last observed position to the origin and its last observed
// heading onto +x. A zero last-step velocity keeps the identity rotation.
std::pair<Scene, FrameTransform> normalize_frame(const Scene& scene);

Scene translate_scene(const Scene& scene, Vec2 offset);

}  // namespace crowdplan
