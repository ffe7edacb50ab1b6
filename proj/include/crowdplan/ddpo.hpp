#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crowdplan/diffusion.hpp"
#include "crowdplan/rewards.hpp"

namespace crowdplan {

struct ShapingOptions {
  bool dynamic_thresholding = true;
  ThresholdConfig thresholding;
};

struct FinetuneConfig {
  int outer_iterations = 100;
  int inner_epochs = 1;
  std::size_t batch_size = 128;
  // 0 disables ratio clipping.
  double clip_radius = 0.2;
  double learning_rate = 1e-4;
  std::vector<RewardSpec> rewards;
  ShapingOptions shaping;
  std::uint64_t seed = 0;
  // Abort when mean |theta| exceeds this multiple of its starting value.
  double divergence_factor = 100.0;

  void validate() const;
};

struct SceneRollout {
  std::string scene_id;
  std::vector<double> context;
  std::vector<StepRecord> records;
  Trajectory plan;
  std::vector<int> rewards;  // one entry per reward spec
  double total_reward = 0.0;
};

struct RewardShaping {
  RewardSpec spec;
  ThresholdResult threshold;
  double mean_reward = 0.0;
};

struct RolloutBatch {
  std::vector<SceneRollout> scenes;
  std::vector<RewardShaping> shaping;
  std::vector<double> rewards;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  std::vector<double> advantages;
  std::uint64_t snapshot_id = 0;

  [[nodiscard]] std::size_t record_count() const;
};

// Per-scene binary rewards for a batch of plans at a given threshold.
std::vector<int> evaluate_reward(RewardKind kind, std::span<const Trajectory> plans, std::span<const Scene> scenes,
                                 std::span<const Forecast> forecasts, double threshold);

// Samples one plan per scene under the snapshot parameters, shapes every
// reward (dynamic thresholding over the batch), combines them and stores the
// normalized advantages.
RolloutBatch collect_rollouts(const PlannerModel& model, std::span<const Scene> scenes,
                              std::span<const Forecast> forecasts, std::span<const RewardSpec> specs,
                              const ShapingOptions& shaping, Rng& rng, std::uint64_t snapshot_id = 0);

inline constexpr double kAdvantageStabilizer = 1e-8;

// (R - mean) / max(std, 1e-8) with the population standard deviation; a
// constant batch maps to all zeros.
std::vector<double> normalize_advantages(std::span<const double> rewards);

// One record's contribution to the clipped importance-sampled surrogate
// min(r A, clip(r, 1-c, 1+c) A), r = exp(log p_theta(action) - log p_old).
struct SurrogateTerm {
  double ratio = 1.0;
  bool clipped = false;
  double objective = 0.0;
  // Gradient of the objective w.r.t. the transition mean.
  std::vector<double> grad_mean;
};

SurrogateTerm surrogate_term(std::span<const double> action, std::span<const double> mean, double variance,
                             double old_log_likelihood, double advantage, double clip_radius);

struct UpdateStats {
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
  double objective = 0.0;
  int optimizer_steps = 0;
};

struct UpdateResult {
  DenoiserParams params;
  OptimizerState optimizer;
  UpdateStats stats;
};

// Gradient (ascent direction, averaged over all B*K records) of the
// surrogate objective at the given parameters.
struct SurrogateGradient {
  DenoiserParams grads;
  UpdateStats stats;
};
SurrogateGradient surrogate_gradient(const DenoiserParams& params, const RolloutBatch& batch,
                                     const NoiseSchedule& schedule, double clip_radius);

// Plain score-function estimator: mean over records of A * grad log p_theta.
DenoiserParams score_function_gradient(const DenoiserParams& params, const RolloutBatch& batch,
                                       const NoiseSchedule& schedule);

// Runs `inner_epochs` optimizer steps on the surrogate. A batch whose
// advantages are all zero carries no signal and leaves parameters untouched.
UpdateResult ddpo_update(const DenoiserParams& params, const RolloutBatch& batch, const NoiseSchedule& schedule,
                         const OptimizerState& optimizer, double clip_radius, int inner_epochs);

struct IterationLog {
  int iteration = 0;
  std::vector<std::string> reward_names;
  std::vector<double> thresholds;
  std::vector<double> mean_rewards;
  std::vector<std::vector<ThresholdTraceEntry>> threshold_traces;
  double mean_total_reward = 0.0;
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
  double objective = 0.0;
  double wall_time_s = 0.0;
};

struct FinetuneResult {
  PlannerModel model;
  OptimizerState optimizer;
  std::vector<IterationLog> log;
};

using IterationCallback = std::function<void(const IterationLog&, const PlannerModel&, const OptimizerState&)>;

FinetuneResult finetune(const PlannerModel& model, const std::vector<Scene>& pool, const std::vector<Forecast>& forecasts,
                        const FinetuneConfig& config, const IterationCallback& on_iteration = {});

}  // namespace crowdplan
