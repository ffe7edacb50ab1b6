#include "crowdplan/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace crowdplan {

std::string to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::Collision:
      return "collision";
    case RewardKind::Success:
      return "success";
    case RewardKind::Discomfort:
      return "discomfort";
  }
  return "unknown";
}

RewardKind reward_kind_from_string(const std::string& name) {
  if (name == "collision") return RewardKind::Collision;
  if (name == "success") return RewardKind::Success;
  if (name == "discomfort") return RewardKind::Discomfort;
  throw std::invalid_argument("unknown reward '" + name + "' (expected collision, success or discomfort)");
}

void RewardSpec::validate() const {
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw std::invalid_argument("reward weight must be >= 0");
  if (!(initial_threshold > 0.0) || !std::isfinite(initial_threshold))
    throw std::invalid_argument("reward initial threshold must be > 0");
}

std::vector<RewardSpec> parse_reward_specs(const std::string& text) {
  std::vector<RewardSpec> specs;
  std::stringstream list(text);
  std::string item;
  while (std::getline(list, item, ',')) {
    std::stringstream fields(item);
    std::string name, weight, threshold, extra;
    if (!std::getline(fields, name, ':') || !std::getline(fields, weight, ':') || !std::getline(fields, threshold, ':') ||
        std::getline(fields, extra, ':'))
      throw std::invalid_argument("reward spec '" + item + "' is not name:weight:init_threshold");
    RewardSpec s;
    s.kind = reward_kind_from_string(name);
    try {
      std::size_t used = 0;
      s.weight = std::stod(weight, &used);
      if (used != weight.size()) throw std::invalid_argument("trailing characters");
      s.initial_threshold = std::stod(threshold, &used);
      if (used != threshold.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::logic_error&) {
      throw std::invalid_argument("reward spec '" + item + "' has a malformed number");
    }
    s.validate();
    for (const auto& prev : specs)
      if (prev.kind == s.kind) throw std::invalid_argument("reward '" + name + "' listed twice");
    specs.push_back(s);
  }
  if (specs.empty()) throw std::invalid_argument("no reward specs given");
  return specs;
}

std::string format_reward_specs(const std::vector<RewardSpec>& specs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (i) out << ',';
    out << to_string(specs[i].kind) << ':' << specs[i].weight << ':' << specs[i].initial_threshold;
  }
  return out.str();
}

double min_neighbor_distance(const Trajectory& plan, std::span<const Trajectory> neighbors) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : neighbors) {
    if (n.size() != plan.size()) throw std::invalid_argument("plan and neighbor futures differ in length");
    for (std::size_t t = 0; t < plan.size(); ++t) best = std::min(best, distance(plan.points[t], n.points[t]));
  }
  return best;
}

int reward_collision(const Trajectory& plan, const Forecast& forecast, double threshold) {
  return min_neighbor_distance(plan, forecast.neighbor_futures) > threshold ? 1 : 0;
}

int reward_success(const Trajectory& plan, Vec2 goal, double threshold) {
  if (plan.points.empty()) throw std::invalid_argument("reward_success: empty plan");
  return distance(plan.back(), goal) <= threshold ? 1 : 0;
}

std::vector<double> jerk_profile(std::span<const Vec2> p, double dt) {
  if (p.size() < 4) throw std::invalid_argument("jerk_profile: need at least 4 positions");
  if (!(dt > 0.0)) throw std::invalid_argument("jerk_profile: dt must be positive");
  const double inv = 1.0 / (dt * dt * dt);
  std::vector<double> out;
  out.reserve(p.size() - 3);
  for (std::size_t i = 0; i + 3 < p.size(); ++i) {
    const Vec2 d3 = p[i + 3] - p[i + 2] * 3.0 + p[i + 1] * 3.0 - p[i];
    out.push_back(d3.norm() * inv);
  }
  return out;
}

std::vector<Vec2> with_anchor(Vec2 last_observed, const Trajectory& plan) {
  std::vector<Vec2> out;
  out.reserve(plan.size() + 1);
  out.push_back(last_observed);
  out.insert(out.end(), plan.points.begin(), plan.points.end());
  return out;
}

double max_jerk(std::span<const Vec2> positions, double dt) {
  const auto j = jerk_profile(positions, dt);
  return *std::max_element(j.begin(), j.end());
}

int reward_discomfort(std::span<const Vec2> positions, double dt, double threshold) {
  return max_jerk(positions, dt) <= threshold ? 1 : 0;
}

double AdaptationSchedule::operator()(int j) const {
  if (j < 1) throw std::invalid_argument("adaptation rate is defined for j >= 1");
  return base / static_cast<double>(j);
}

namespace {

int checked_sum(const std::vector<int>& r, std::size_t batch_size) {
  if (r.size() != batch_size) throw std::invalid_argument("dynamic_threshold: evaluator returned wrong batch size");
  int s = 0;
  for (int v : r) {
    if (v != 0 && v != 1) throw std::invalid_argument("dynamic_threshold: evaluator returned a non-binary reward");
    s += v;
  }
  return s;
}

}  // namespace

ThresholdResult dynamic_threshold(const RewardEvaluator& evaluate, std::size_t batch_size, double initial_threshold,
                                  double deviation, const AdaptationSchedule& rate, int max_iterations) {
  if (batch_size == 0) throw std::invalid_argument("dynamic_threshold: batch size must be >= 1");
  if (max_iterations < 0) throw std::invalid_argument("dynamic_threshold: J must be >= 0");
  if (!(initial_threshold > 0.0)) throw std::invalid_argument("dynamic_threshold: initial threshold must be > 0");
  if (!(deviation >= 0.0)) throw std::invalid_argument("dynamic_threshold: deviation must be >= 0");

  const double half = static_cast<double>(batch_size) / 2.0;
  auto gap = [half](int sum) { return std::abs(static_cast<double>(sum) - half); };

  ThresholdResult res;
  double eps = initial_threshold;
  std::vector<int> r = evaluate(eps);
  int sum = checked_sum(r, batch_size);

  for (int j = 1; j <= max_iterations; ++j) {
    res.trace.push_back({j, eps, sum});
    if (gap(sum) <= deviation) break;
    const double a = rate(j);
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("dynamic_threshold: adaptation rate must lie in (0, 1)");
    double candidate = eps + a * eps;
    std::vector<int> rc = evaluate(candidate);
    int sc = checked_sum(rc, batch_size);
    if (gap(sc) > gap(sum)) {
      candidate = eps - a * eps;
      rc = evaluate(candidate);
      sc = checked_sum(rc, batch_size);
    }
    eps = candidate;
    r = std::move(rc);
    sum = sc;
    ++res.adjustments;
  }
  res.trace.push_back({0, eps, sum});
  res.threshold = eps;
  res.rewards = std::move(r);
  return res;
}

ThresholdResult dynamic_threshold(const RewardEvaluator& evaluate, std::size_t batch_size, double initial_threshold,
                                  const ThresholdConfig& config) {
  const double delta = config.deviation < 0.0 ? static_cast<double>(batch_size) / 10.0 : config.deviation;
  return dynamic_threshold(evaluate, batch_size, initial_threshold, delta, config.rate, config.max_iterations);
}

std::vector<double> combine_rewards(std::span<const std::vector<int>> rewards, std::span<const RewardSpec> specs) {
  if (rewards.size() != specs.size()) throw std::invalid_argument("combine_rewards: one reward vector per spec required");
  if (rewards.empty()) return {};
  const std::size_t n = rewards.front().size();
  std::vector<double> total(n, 0.0);
  for (std::size_t m = 0; m < rewards.size(); ++m) {
    if (rewards[m].size() != n) throw std::invalid_argument("combine_rewards: reward vectors differ in length");
    for (std::size_t i = 0; i < n; ++i) total[i] += specs[m].weight * rewards[m][i];
  }
  return total;
}

}  // namespace crowdplan
