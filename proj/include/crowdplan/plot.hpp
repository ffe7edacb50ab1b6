#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crowdplan/metrics.hpp"
#include "crowdplan/scene.hpp"

namespace crowdplan {

struct PlotStyle {
  double goal_radius = 0.2;       // drawn around the ego goal
  double collision_radius = 0.6;  // drawn around ground-truth neighbor positions
  int pixels = 640;
};

PlotStyle plot_style(const EvalThresholds& thresholds);

// Static SVG of one scene: histories, ground truth, zero or more ego plans,
// the goal disk and per-step neighbor collision disks. Output depends only
// on the inputs.
std::string render_svg(const Scene& scene, const std::vector<Trajectory>& plans, const PlotStyle& style);

void emit_plot(const Scene& scene, const std::vector<Trajectory>& plans, const std::filesystem::path& out,
               const PlotStyle& style);

}  // namespace crowdplan
