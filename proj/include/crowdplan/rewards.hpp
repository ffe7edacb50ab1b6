#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crowdplan/forecast.hpp"
#include "crowdplan/scene.hpp"

namespace crowdplan {

enum class RewardKind { Collision, Success, Discomfort };

std::string to_string(RewardKind kind);
RewardKind reward_kind_from_string(const std::string& name);

// All rewards are oriented so that 1 is the desirable outcome
// (safe, reached, comfortable).
struct RewardSpec {
  RewardKind kind = RewardKind::Collision;
  double weight = 1.0;
  double initial_threshold = 0.6;

  void validate() const;
  friend bool operator==(const RewardSpec&, const RewardSpec&) = default;
};

// Parses "name:weight:init_threshold[,name:weight:init_threshold...]".
std::vector<RewardSpec> parse_reward_specs(const std::string& text);
std::string format_reward_specs(const std::vector<RewardSpec>& specs);

// 1 iff every plan point stays strictly farther than `threshold` from the
// forecast neighbor positions at the same timestep.
int reward_collision(const Trajectory& plan, const Forecast& forecast, double threshold);
// Smallest plan-to-neighbor distance over all timesteps and neighbors.
double min_neighbor_distance(const Trajectory& plan, std::span<const Trajectory> neighbors);

// 1 iff the final plan point is within `threshold` of the goal.
int reward_success(const Trajectory& plan, Vec2 goal, double threshold);

// Third finite differences over each run of four consecutive positions,
// divided by dt^3. Needs at least 4 positions.
std::vector<double> jerk_profile(std::span<const Vec2> positions, double dt);
// Plan positions prefixed by the last observed ego position.
std::vector<Vec2> with_anchor(Vec2 last_observed, const Trajectory& plan);
double max_jerk(std::span<const Vec2> positions, double dt);

// 1 iff the maximum jerk magnitude is <= threshold.
int reward_discomfort(std::span<const Vec2> positions, double dt, double threshold);

// Adaptation rate alpha(j) = base / j for j >= 1.
struct AdaptationSchedule {
  double base = 0.5;
  [[nodiscard]] double operator()(int j) const;
};

struct ThresholdTraceEntry {
  int iteration = 0;  // j, 0 for the final evaluation
  double threshold = 0.0;
  int reward_sum = 0;
};

struct ThresholdResult {
  double threshold = 0.0;
  std::vector<int> rewards;
  int adjustments = 0;
  // (epsilon, sum r) at the start of every iteration, then the final value.
  std::vector<ThresholdTraceEntry> trace;
};

struct ThresholdConfig {
  // Deviation tolerance; a negative value means B / 10.
  double deviation = -1.0;
  AdaptationSchedule rate;
  int max_iterations = 20;
};

using RewardEvaluator = std::function<std::vector<int>(double threshold)>;

// Adjusts the threshold so that the batch reward sum approaches B/2: at most
// `max_iterations` rounds of "try eps*(1+a(j)); if that moves the sum farther
// from B/2 use eps*(1-a(j)) instead".
ThresholdResult dynamic_threshold(const RewardEvaluator& evaluate, std::size_t batch_size, double initial_threshold,
                                  double deviation, const AdaptationSchedule& rate, int max_iterations);
ThresholdResult dynamic_threshold(const RewardEvaluator& evaluate, std::size_t batch_size, double initial_threshold,
                                  const ThresholdConfig& config);

// Elementwise weighted sum of binary reward vectors.
std::vector<double> combine_rewards(std::span<const std::vector<int>> rewards, std::span<const RewardSpec> specs);

}  // namespace crowdplan
