#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "crowdplan/denoiser.hpp"
#include "crowdplan/diffusion.hpp"
#include "crowdplan/forecast.hpp"
#include "crowdplan/scene.hpp"

namespace fixtures {

using namespace crowdplan;

inline Trajectory line(Vec2 start, Vec2 step, std::size_t n, double dt = 0.4) {
  Trajectory t{{}, dt};
  for (std::size_t i = 0; i < n; ++i) t.points.push_back(start + step * static_cast<double>(i));
  return t;
}

// Ego walks along +x, neighbors on parallel lanes `gap` meters apart.
inline Scene lanes(std::size_t neighbors, double gap, std::size_t t_obs = 8, std::size_t t_fut = 8) {
  Scene s;
  s.scene_id = "lanes";
  const Vec2 step{0.4, 0.0};
  s.ego_history = line({0.0, 0.0}, step, t_obs);
  s.ego_future_gt = line(step * static_cast<double>(t_obs), step, t_fut);
  s.ego_goal = s.ego_future_gt.back();
  for (std::size_t n = 0; n < neighbors; ++n) {
    const Vec2 start{0.0, gap * static_cast<double>(n + 1)};
    s.neighbor_histories.push_back(line(start, step, t_obs));
    s.neighbor_futures_gt.push_back(line(start + step * static_cast<double>(t_obs), step, t_fut));
  }
  return s;
}

inline std::vector<Scene> small_scenes(std::size_t count, std::uint64_t seed = 3) {
  SceneConfig cfg;
  cfg.num_agents = 3;
  cfg.t_obs = 4;
  cfg.t_fut = 4;
  return generate_scenes(count, cfg, seed);
}

// A compact planner over small_scenes() for fast tests.
inline PlannerModel small_planner(const std::vector<Scene>& scenes, int steps = 5, std::uint64_t seed = 11) {
  const auto forecasts = forecast_all(scenes);
  const InputLayout layout{scenes.front().t_obs(), scenes.front().t_fut(), scenes.front().num_neighbors(), 4};
  const auto arch = default_architecture(layout, 12, 2);
  return make_planner(layout, arch, build_schedule(steps, 1e-3, 0.4), scenes, forecasts, seed);
}

}  // namespace fixtures
