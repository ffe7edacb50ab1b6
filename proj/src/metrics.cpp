#include "crowdplan/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "crowdplan/rewards.hpp"

namespace crowdplan {

EvalThresholds crowdnav_thresholds() { return {0.6, 0.2, 1.0}; }
EvalThresholds ethucy_thresholds() { return {0.2, 0.5, 1.0}; }

MetricsReport compute_metrics(const std::vector<Trajectory>& plans, const std::vector<Scene>& scenes,
                              const EvalThresholds& th) {
  if (plans.size() != scenes.size()) throw std::invalid_argument("compute_metrics: need exactly one plan per scene");
  if (scenes.empty()) throw std::invalid_argument("compute_metrics: empty evaluation set");

  MetricsReport rep;
  rep.thresholds = th;
  rep.scene_count = scenes.size();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& plan = plans[i];
    const auto& sc = scenes[i];
    if (plan.size() != sc.t_fut())
      throw std::invalid_argument("compute_metrics: plan for scene " + sc.scene_id + " has the wrong horizon");

    SceneMetrics m;
    m.scene_id = sc.scene_id;
    m.min_distance = min_neighbor_distance(plan, sc.neighbor_futures_gt);
    m.final_goal_distance = distance(plan.back(), sc.ego_goal);
    m.max_jerk = max_jerk(with_anchor(sc.ego_history.back(), plan), sc.dt());
    double sum = 0.0;
    for (std::size_t t = 0; t < plan.size(); ++t) sum += distance(plan.points[t], sc.ego_future_gt.points[t]);
    m.ade = sum / static_cast<double>(plan.size());
    m.fde = distance(plan.back(), sc.ego_future_gt.back());
    m.collision = m.min_distance < th.collision;
    m.success = m.final_goal_distance <= th.success;
    m.discomfort = m.max_jerk > th.discomfort;

    rep.collision_rate += m.collision ? 1.0 : 0.0;
    rep.success_rate += m.success ? 1.0 : 0.0;
    rep.discomfort_rate += m.discomfort ? 1.0 : 0.0;
    rep.ade += m.ade;
    rep.fde += m.fde;
    rep.mean_max_jerk += m.max_jerk;
    rep.mean_min_distance += m.min_distance;
    rep.per_scene.push_back(std::move(m));
  }
  const auto n = static_cast<double>(scenes.size());
  rep.collision_rate /= n;
  rep.success_rate /= n;
  rep.discomfort_rate /= n;
  rep.ade /= n;
  rep.fde /= n;
  rep.mean_max_jerk /= n;
  rep.mean_min_distance /= n;
  return rep;
}

std::vector<MetricDelta> compare_reports(const MetricsReport& a, const MetricsReport& b) {
  if (!(a.thresholds == b.thresholds)) throw std::invalid_argument("compare_reports: reports use different thresholds");
  if (a.scene_count != b.scene_count) throw std::invalid_argument("compare_reports: reports cover different scene sets");
  auto delta = [](std::string name, double before, double after) {
    const double rel = before == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (after - before) / before;
    return MetricDelta{std::move(name), before, after, after - before, rel};
  };
  return {
      delta("collision_rate", a.collision_rate, b.collision_rate),
      delta("success_rate", a.success_rate, b.success_rate),
      delta("discomfort_rate", a.discomfort_rate, b.discomfort_rate),
      delta("ade", a.ade, b.ade),
      delta("fde", a.fde, b.fde),
      delta("mean_max_jerk", a.mean_max_jerk, b.mean_max_jerk),
  };
}

void write_report_csv(std::ostream& out, const MetricsReport& r) {
  out << std::setprecision(17);
  out << "metric,value,threshold,n_scenes\n";
  const auto n = r.scene_count;
  out << "collision_rate," << r.collision_rate << ',' << r.thresholds.collision << ',' << n << '\n';
  out << "success_rate," << r.success_rate << ',' << r.thresholds.success << ',' << n << '\n';
  out << "discomfort_rate," << r.discomfort_rate << ',' << r.thresholds.discomfort << ',' << n << '\n';
  out << "ade," << r.ade << ",," << n << '\n';
  out << "fde," << r.fde << ",," << n << '\n';
  out << "mean_max_jerk," << r.mean_max_jerk << ",," << n << '\n';
}

void write_detail_csv(std::ostream& out, const MetricsReport& r) {
  out << std::setprecision(17);
  out << "scene_id,min_distance,final_goal_distance,max_jerk,ade,fde,collision,success,discomfort\n";
  for (const auto& m : r.per_scene)
    out << m.scene_id << ',' << m.min_distance << ',' << m.final_goal_distance << ',' << m.max_jerk << ',' << m.ade
        << ',' << m.fde << ',' << int(m.collision) << ',' << int(m.success) << ',' << int(m.discomfort) << '\n';
}

void write_comparison_csv(std::ostream& out, const std::vector<MetricDelta>& deltas) {
  out << std::setprecision(17);
  out << "metric,before,after,absolute_delta,relative_delta\n";
  for (const auto& d : deltas)
    out << d.metric << ',' << d.before << ',' << d.after << ',' << d.absolute << ',' << d.relative << '\n';
}

void save_report(const std::filesystem::path& summary, const std::filesystem::path& detail, const MetricsReport& report) {
  std::ofstream s(summary, std::ios::binary);
  if (!s) throw std::runtime_error("cannot write report: " + summary.string());
  write_report_csv(s, report);
  if (!detail.empty()) {
    std::ofstream d(detail, std::ios::binary);
    if (!d) throw std::runtime_error("cannot write report detail: " + detail.string());
    write_detail_csv(d, report);
  }
}

}  // namespace crowdplan
