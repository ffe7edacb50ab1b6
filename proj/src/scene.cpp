#include "crowdplan/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "crowdplan/rng.hpp"

namespace crowdplan {
namespace {

struct Walker {
  Vec2 position;
  Vec2 goal;
  double speed;
};

std::vector<Vec2> simulate(Walker w, std::size_t steps, const SceneConfig& cfg, Rng& rng) {
  std::vector<Vec2> out;
  out.reserve(steps);
  out.push_back(w.position);
  const double clip = cfg.heading_noise_clip * cfg.heading_noise_std;
  for (std::size_t i = 1; i < steps; ++i) {
    const Vec2 to_goal = w.goal - w.position;
    const double remaining = to_goal.norm();
    const double noise = std::clamp(cfg.heading_noise_std * rng.normal(), -clip, clip);
    const double step = std::min(w.speed * cfg.dt, remaining);
    if (step > 0.0) {
      const double heading = std::atan2(to_goal.y, to_goal.x) + noise;
      w.position += Vec2{std::cos(heading), std::sin(heading)} * step;
    }
    out.push_back(w.position);
  }
  return out;
}

Trajectory slice(const std::vector<Vec2>& path, std::size_t begin, std::size_t count, double dt) {
  return Trajectory{{path.begin() + static_cast<std::ptrdiff_t>(begin),
                     path.begin() + static_cast<std::ptrdiff_t>(begin + count)},
                    dt};
}

bool all_finite(const Trajectory& t) {
  return std::all_of(t.points.begin(), t.points.end(), [](Vec2 p) { return p.finite(); });
}

}  // namespace

void SceneConfig::validate() const {
  if (num_agents < 2) throw std::invalid_argument("scene config: num_agents must be >= 2 (ego plus at least one neighbor)");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("scene config: dt must be positive");
  if (t_obs < 2) throw std::invalid_argument("scene config: t_obs must be >= 2");
  if (t_fut < 1) throw std::invalid_argument("scene config: t_fut must be >= 1");
  if (!(arena_radius > 0.0)) throw std::invalid_argument("scene config: arena_radius must be positive");
  if (arena_margin < 0.0) throw std::invalid_argument("scene config: arena_margin must be nonnegative");
  if (!(speed_min > 0.0) || speed_max < speed_min)
    throw std::invalid_argument("scene config: speed range must satisfy 0 < speed_min <= speed_max");
  if (heading_noise_std < 0.0 || heading_noise_clip < 0.0)
    throw std::invalid_argument("scene config: heading noise parameters must be nonnegative");
  if (min_start_separation < 0.0)
    throw std::invalid_argument("scene config: min_start_separation must be nonnegative");
}

std::vector<Scene> generate_scenes(std::size_t count, const SceneConfig& cfg, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("generate_scenes: count must be >= 1");
  cfg.validate();

  const std::size_t steps = cfg.t_obs + cfg.t_fut;
  const Rng root = Rng(seed).split("scenes");
  std::vector<Scene> scenes;
  scenes.reserve(count);

  for (std::size_t s = 0; s < count; ++s) {
    Rng rng = root.split(static_cast<std::uint64_t>(s));

    std::vector<Vec2> starts;
    for (std::size_t a = 0; a < cfg.num_agents; ++a) {
      Vec2 start;
      for (int attempt = 0; attempt < 1000; ++attempt) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        start = Vec2{std::cos(angle), std::sin(angle)} * cfg.arena_radius;
        const bool clear = std::all_of(starts.begin(), starts.end(), [&](Vec2 other) {
          return distance(start, other) >= cfg.min_start_separation;
        });
        if (clear) break;
      }
      starts.push_back(start);
    }

    std::vector<std::vector<Vec2>> paths;
    paths.reserve(cfg.num_agents);
    for (Vec2 start : starts) {
      const Walker w{start, start * -1.0, rng.uniform(cfg.speed_min, cfg.speed_max)};
      const std::size_t lead = cfg.departure_stagger == 0 ? 0 : rng.uniform_index(cfg.departure_stagger + 1);
      auto path = simulate(w, steps + lead, cfg, rng);
      paths.emplace_back(path.begin() + static_cast<std::ptrdiff_t>(lead), path.end());
    }

    Scene scene;
    scene.scene_id = "seed" + std::to_string(seed) + "-" + std::to_string(s);
    scene.ego_history = slice(paths[0], 0, cfg.t_obs, cfg.dt);
    scene.ego_future_gt = slice(paths[0], cfg.t_obs, cfg.t_fut, cfg.dt);
    scene.ego_goal = scene.ego_future_gt.back();
    for (std::size_t a = 1; a < paths.size(); ++a) {
      scene.neighbor_histories.push_back(slice(paths[a], 0, cfg.t_obs, cfg.dt));
      scene.neighbor_futures_gt.push_back(slice(paths[a], cfg.t_obs, cfg.t_fut, cfg.dt));
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

SceneVerdict validate_scene(const Scene& scene, double arena_bound) {
  SceneVerdict verdict;
  auto fail = [&](const char* what) {
    if (std::find(verdict.failures.begin(), verdict.failures.end(), what) == verdict.failures.end())
      verdict.failures.emplace_back(what);
  };

  std::vector<const Trajectory*> histories{&scene.ego_history};
  std::vector<const Trajectory*> futures{&scene.ego_future_gt};
  for (const auto& t : scene.neighbor_histories) histories.push_back(&t);
  for (const auto& t : scene.neighbor_futures_gt) futures.push_back(&t);

  if (scene.neighbor_histories.size() != scene.neighbor_futures_gt.size()) fail(kInvariantNeighborCount);

  bool finite = scene.ego_goal.finite();
  for (const auto* t : histories) finite = finite && all_finite(*t);
  for (const auto* t : futures) finite = finite && all_finite(*t);
  if (!finite) fail(kInvariantFinite);

  for (const auto* t : histories)
    if (t->points.empty() || !(t->dt > 0.0)) fail(kInvariantTrajectory);
  for (const auto* t : futures)
    if (t->points.empty() || !(t->dt > 0.0)) fail(kInvariantTrajectory);

  const std::size_t t_obs = scene.ego_history.size();
  const double dt = scene.ego_history.dt;
  for (const auto* t : histories)
    if (t->size() != t_obs || t->dt != dt) fail(kInvariantHistoryLength);

  const std::size_t t_fut = scene.ego_future_gt.size();
  for (const auto* t : futures)
    if (t->size() != t_fut || t->dt != dt) fail(kInvariantFutureLength);

  if (!scene.ego_future_gt.points.empty()) {
    const Vec2 last = scene.ego_future_gt.back();
    if (!last.finite() || last.norm() > arena_bound) fail(kInvariantArena);
  }
  return verdict;
}

Vec2 FrameTransform::rotate_to_local(Vec2 v) const noexcept {
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

Vec2 FrameTransform::rotate_to_world(Vec2 v) const noexcept {
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Vec2 FrameTransform::to_local(Vec2 world) const noexcept { return rotate_to_local(world - translation); }

Vec2 FrameTransform::to_world(Vec2 local) const noexcept { return rotate_to_world(local) + translation; }

Trajectory FrameTransform::to_local(const Trajectory& t) const {
  Trajectory out{{}, t.dt};
  out.points.reserve(t.size());
  for (Vec2 p : t.points) out.points.push_back(to_local(p));
  return out;
}

Trajectory FrameTransform::to_world(const Trajectory& t) const {
  Trajectory out{{}, t.dt};
  out.points.reserve(t.size());
  for (Vec2 p : t.points) out.points.push_back(to_world(p));
  return out;
}

std::pair<Scene, FrameTransform> normalize_frame(const Scene& scene) {
  const auto& hist = scene.ego_history.points;
  if (hist.size() < 2) throw std::invalid_argument("normalize_frame: ego history needs at least 2 points");

  FrameTransform tf;
  tf.translation = hist.back();
  const Vec2 velocity = hist.back() - hist[hist.size() - 2];
  if (velocity.squared_norm() > 0.0) tf.rotation = std::atan2(velocity.y, velocity.x);

  Scene local;
  local.scene_id = scene.scene_id;
  local.ego_history = tf.to_local(scene.ego_history);
  local.ego_future_gt = tf.to_local(scene.ego_future_gt);
  local.ego_goal = tf.to_local(scene.ego_goal);
  for (const auto& t : scene.neighbor_histories) local.neighbor_histories.push_back(tf.to_local(t));
  for (const auto& t : scene.neighbor_futures_gt) local.neighbor_futures_gt.push_back(tf.to_local(t));
  return {std::move(local), tf};
}

Scene translate_scene(const Scene& scene, Vec2 offset) {
  auto shift = [offset](Trajectory t) {
    for (auto& p : t.points) p += offset;
    return t;
  };
  Scene out = scene;
  out.ego_history = shift(scene.ego_history);
  out.ego_future_gt = shift(scene.ego_future_gt);
  out.ego_goal = scene.ego_goal + offset;
  for (auto& t : out.neighbor_histories) t = shift(t);
  for (auto& t : out.neighbor_futures_gt) t = shift(t);
  return out;
}

}  // namespace crowdplan
