#pragma once

#include <span>
#include <vector>

#include "crowdplan/diffusion.hpp"

namespace crowdplan {

struct GuidanceConfig {
  double scale = 0.0;
  // Hinge activation distance in meters.
  double activation_distance = 0.6;

  void validate() const;
};

struct CostAndGradient {
  double cost = 0.0;
  // d cost / d plan, flattened as (x0, y0, x1, y1, ...).
  std::vector<double> gradient;
};

// sum over (t, n) of max(0, d_act - |plan_t - neighbor_t|)^2. At exactly
// coincident points the gradient direction is taken along +x.
CostAndGradient collision_cost(const Trajectory& plan, std::span<const Trajectory> neighbors, double activation_distance);

// reverse_step with the mean shifted by -scale * reverse_variance[k] *
// grad_y cost, the cost being evaluated on y^k decoded to an ego-frame plan.
StepResult guided_reverse_step(const PlannerModel& model, const Conditioning& cond, std::span<const double> yk, int k,
                               const GuidanceConfig& config, Rng& rng, ReverseOptions options = {});

// Mean offset applied by guided_reverse_step at (y^k, k).
std::vector<double> guidance_shift(const PlannerModel& model, const Conditioning& cond, std::span<const double> yk,
                                   int k, const GuidanceConfig& config);

SampledPlan guided_sample_plan(const PlannerModel& model, const Conditioning& cond, const GuidanceConfig& config,
                               Rng& rng, ReverseOptions options = {});
SampledPlan guided_sample_plan(const PlannerModel& model, const Scene& scene, const Forecast& forecast,
                               const GuidanceConfig& config, Rng& rng, ReverseOptions options = {});

}  // namespace crowdplan
