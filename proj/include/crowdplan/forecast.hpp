#pragma once

#include <string>
#include <vector>

#include "crowdplan/scene.hpp"

namespace crowdplan {

// Predicted neighbor futures that condition the planner. The forecaster is
// frozen: nothing in training ever updates it.
struct Forecast {
  std::vector<Trajectory> neighbor_futures;
  std::string source;

  [[nodiscard]] std::size_t t_fut() const noexcept {
    return neighbor_futures.empty() ? 0 : neighbor_futures.front().size();
  }
};

inline constexpr const char* kConstantVelocitySource = "constant-velocity";

// Extrapolates each neighbor from its last observed position with its mean
// velocity over the whole history. Requires at least 2 history points.
Forecast forecast_constant_velocity(const Scene& scene);

std::vector<Forecast> forecast_all(const std::vector<Scene>& scenes);

// Re-expresses a forecast in another frame.
Forecast to_local(const Forecast& forecast, const FrameTransform& tf);

}  // namespace crowdplan
