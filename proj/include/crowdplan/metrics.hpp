#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "crowdplan/scene.hpp"

namespace crowdplan {

// Fixed evaluation thresholds. These are never adapted during evaluation.
struct EvalThresholds {
  double collision = 0.6;   // m
  double success = 0.2;     // m
  double discomfort = 1.0;  // m/s^3

  friend bool operator==(const EvalThresholds&, const EvalThresholds&) = default;
};

EvalThresholds crowdnav_thresholds();
EvalThresholds ethucy_thresholds();

struct SceneMetrics {
  std::string scene_id;
  double min_distance = 0.0;  // to ground-truth neighbor futures
  double final_goal_distance = 0.0;
  double max_jerk = 0.0;
  double ade = 0.0;
  double fde = 0.0;
  bool collision = false;
  bool success = false;
  bool discomfort = false;
};

struct MetricsReport {
  double collision_rate = 0.0;
  double success_rate = 0.0;
  double discomfort_rate = 0.0;
  double ade = 0.0;
  double fde = 0.0;
  double mean_max_jerk = 0.0;
  double mean_min_distance = 0.0;
  std::vector<SceneMetrics> per_scene;
  EvalThresholds thresholds;
  std::size_t scene_count = 0;
};

// Collision is judged against ground-truth neighbor futures (training
// rewards use forecasts instead).
MetricsReport compute_metrics(const std::vector<Trajectory>& plans, const std::vector<Scene>& scenes,
                              const EvalThresholds& thresholds);

struct MetricDelta {
  std::string metric;
  double before = 0.0;
  double after = 0.0;
  double absolute = 0.0;
  // (after - before) / before; NaN when before == 0.
  double relative = 0.0;
};

std::vector<MetricDelta> compare_reports(const MetricsReport& before, const MetricsReport& after);

// Summary table "metric,value,threshold,n_scenes".
void write_report_csv(std::ostream& out, const MetricsReport& report);
void write_detail_csv(std::ostream& out, const MetricsReport& report);
void write_comparison_csv(std::ostream& out, const std::vector<MetricDelta>& deltas);
void save_report(const std::filesystem::path& summary, const std::filesystem::path& detail, const MetricsReport& report);

}  // namespace crowdplan
