#include "crowdplan/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace crowdplan {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  std::string s(buf);
  return s == "-0.0000" ? "0.0000" : s;
}

// SVG y grows downwards; flip so the drawing reads like a map.
std::string pt(Vec2 p) { return num(p.x) + "," + num(-p.y); }

std::string polyline(const Trajectory& t, const std::string& cls) {
  std::string s = "  <polyline class=\"" + cls + "\" points=\"";
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    if (i) s += ' ';
    s += pt(t.points[i]);
  }
  return s + "\"/>\n";
}

std::string circle(Vec2 c, double r, const std::string& cls) {
  return "  <circle class=\"" + cls + "\" cx=\"" + num(c.x) + "\" cy=\"" + num(-c.y) + "\" r=\"" + num(r) + "\"/>\n";
}

}  // namespace

PlotStyle plot_style(const EvalThresholds& thresholds) {
  PlotStyle s;
  s.goal_radius = thresholds.success;
  s.collision_radius = thresholds.collision;
  return s;
}

std::string render_svg(const Scene& scene, const std::vector<Trajectory>& plans, const PlotStyle& style) {
  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  auto grow = [&](const Trajectory& t) {
    for (Vec2 p : t.points) {
      lo_x = std::min(lo_x, p.x);
      hi_x = std::max(hi_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_y = std::max(hi_y, p.y);
    }
  };
  grow(scene.ego_history);
  grow(scene.ego_future_gt);
  for (const auto& t : scene.neighbor_histories) grow(t);
  for (const auto& t : scene.neighbor_futures_gt) grow(t);
  for (const auto& t : plans) grow(t);
  const double pad = std::max(style.collision_radius, style.goal_radius) + 0.5;
  lo_x -= pad;
  lo_y -= pad;
  hi_x += pad;
  hi_y += pad;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.pixels) + "\" height=\"" +
       std::to_string(style.pixels) + "\" viewBox=\"" + num(lo_x) + " " + num(-hi_y) + " " + num(hi_x - lo_x) + " " +
       num(hi_y - lo_y) + "\">\n";
  s += "  <title>" + scene.scene_id + "</title>\n";
  s += "  <style>polyline{fill:none;stroke-width:0.04}"
       ".ego-history{stroke:#1f4e9c}.ego-gt{stroke:#1f4e9c;stroke-dasharray:0.1 0.08}"
       ".neighbor-history{stroke:#e07b24}.neighbor-gt{stroke:#e07b24;stroke-dasharray:0.1 0.08}"
       ".plan{stroke:#2a9d3a}.goal{fill:#2a9d3a;fill-opacity:0.25;stroke:#2a9d3a;stroke-width:0.02}"
       ".collision{fill:#e07b24;fill-opacity:0.06;stroke:#e07b24;stroke-width:0.01}</style>\n";

  for (const auto& t : scene.neighbor_futures_gt)
    for (Vec2 p : t.points) s += circle(p, style.collision_radius, "collision");
  s += circle(scene.ego_goal, style.goal_radius, "goal");
  for (const auto& t : scene.neighbor_histories) s += polyline(t, "neighbor-history");
  for (const auto& t : scene.neighbor_futures_gt) s += polyline(t, "neighbor-gt");
  s += polyline(scene.ego_history, "ego-history");
  s += polyline(scene.ego_future_gt, "ego-gt");
  for (const auto& t : plans) {
    if (t.size() != scene.t_fut()) throw std::invalid_argument("emit_plot: plan horizon differs from the scene's");
    s += polyline(t, "plan");
  }
  s += "</svg>\n";
  return s;
}

void emit_plot(const Scene& scene, const std::vector<Trajectory>& plans, const std::filesystem::path& out,
               const PlotStyle& style) {
  const auto svg = render_svg(scene, plans, style);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write plot: " + out.string());
  f << svg;
  if (!f) throw std::runtime_error("failed writing plot: " + out.string());
}

}  // namespace crowdplan
