#include "crowdplan/forecast.hpp"

#include <stdexcept>

namespace crowdplan {

Forecast forecast_constant_velocity(const Scene& scene) {
  const std::size_t horizon = scene.t_fut();
  Forecast f;
  f.source = kConstantVelocitySource;
  f.neighbor_futures.reserve(scene.num_neighbors());
  for (const auto& hist : scene.neighbor_histories) {
    const auto& pts = hist.points;
    if (pts.size() < 2)
      throw std::invalid_argument("forecast_constant_velocity: neighbor history needs at least 2 points (T_obs >= 2)");
    const Vec2 velocity = (pts.back() - pts.front()) * (1.0 / static_cast<double>(pts.size() - 1));
    Trajectory future{{}, hist.dt};
    future.points.reserve(horizon);
    for (std::size_t t = 1; t <= horizon; ++t) future.points.push_back(pts.back() + velocity * static_cast<double>(t));
    f.neighbor_futures.push_back(std::move(future));
  }
  return f;
}

std::vector<Forecast> forecast_all(const std::vector<Scene>& scenes) {
  std::vector<Forecast> out;
  out.reserve(scenes.size());
  for (const auto& s : scenes) out.push_back(forecast_constant_velocity(s));
  return out;
}

Forecast to_local(const Forecast& forecast, const FrameTransform& tf) {
  Forecast out;
  out.source = forecast.source;
  for (const auto& t : forecast.neighbor_futures) out.neighbor_futures.push_back(tf.to_local(t));
  return out;
}

}  // namespace crowdplan
