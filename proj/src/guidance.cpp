#include "crowdplan/guidance.hpp"

#include <cmath>
#include <stdexcept>

namespace crowdplan {

void GuidanceConfig::validate() const {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw std::invalid_argument("guidance scale must be >= 0");
  if (!(activation_distance > 0.0)) throw std::invalid_argument("guidance activation distance must be > 0");
}

CostAndGradient collision_cost(const Trajectory& plan, std::span<const Trajectory> neighbors, double activation_distance) {
  CostAndGradient out{0.0, std::vector<double>(2 * plan.size(), 0.0)};
  for (const auto& n : neighbors) {
    if (n.size() != plan.size()) throw std::invalid_argument("collision_cost: plan and forecast lengths differ");
    for (std::size_t t = 0; t < plan.size(); ++t) {
      const Vec2 diff = plan.points[t] - n.points[t];
      const double d = diff.norm();
      const double gap = activation_distance - d;
      if (gap <= 0.0) continue;
      out.cost += gap * gap;
      const Vec2 dir = d > 0.0 ? diff * (1.0 / d) : Vec2{1.0, 0.0};
      // d/dp (d_act - |p - q|)^2 = -2 gap * (p - q)/|p - q|
      out.gradient[2 * t] += -2.0 * gap * dir.x;
      out.gradient[2 * t + 1] += -2.0 * gap * dir.y;
    }
  }
  return out;
}

std::vector<double> guidance_shift(const PlannerModel& model, const Conditioning& cond, std::span<const double> yk,
                                   int k, const GuidanceConfig& config) {
  config.validate();
  std::vector<double> shift(yk.size(), 0.0);
  if (config.scale == 0.0) return shift;
  const auto xy = model.plan_norm.invert(yk);
  const auto cg = collision_cost(unflatten(xy, cond.local_scene.dt()), cond.local_forecast.neighbor_futures,
                                 config.activation_distance);
  const double step = config.scale * model.schedule.reverse_variance[k];
  // Chain rule through the standardization: dx/dz = scale.
  for (std::size_t i = 0; i < yk.size(); ++i) shift[i] = -step * cg.gradient[i] * model.plan_norm.scale[i];
  return shift;
}

StepResult guided_reverse_step(const PlannerModel& model, const Conditioning& cond, std::span<const double> yk, int k,
                               const GuidanceConfig& config, Rng& rng, ReverseOptions options) {
  if (config.scale == 0.0) {
    config.validate();
    return reverse_step(model.params, yk, k, cond.context, model.schedule, rng, options);
  }
  const auto shift = guidance_shift(model, cond, yk, k, config);
  return reverse_step(model.params, yk, k, cond.context, model.schedule, rng, options, shift);
}

SampledPlan guided_sample_plan(const PlannerModel& model, const Conditioning& cond, const GuidanceConfig& config,
                               Rng& rng, ReverseOptions options) {
  return run_reverse_chain(model, cond, rng, [&](std::span<const double> yk, int k, Rng& r) {
    return guided_reverse_step(model, cond, yk, k, config, r, options);
  });
}

SampledPlan guided_sample_plan(const PlannerModel& model, const Scene& scene, const Forecast& forecast,
                               const GuidanceConfig& config, Rng& rng, ReverseOptions options) {
  return guided_sample_plan(model, make_conditioning(model, scene, forecast), config, rng, options);
}

}  // namespace crowdplan
