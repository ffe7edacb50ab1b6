#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crowdplan/denoiser.hpp"
#include "crowdplan/forecast.hpp"
#include "crowdplan/rng.hpp"
#include "crowdplan/scene.hpp"

namespace crowdplan {

// Arrays are indexed by diffusion step k = 0..K; entry 0 is the clean-data
// convention (beta = 0, alpha_bar = 1).
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  // True posterior variance of q(y^{k-1} | y^k, y^0). Zero at k = 1.
  std::vector<double> beta_tilde;
  // Variance used by the reverse transitions: beta_tilde, except at k = 1
  // where the degenerate zero is replaced by beta_tilde[2] (beta[1] when K = 1).
  std::vector<double> reverse_variance;
  double beta_start = 0.0;
  double beta_end = 0.0;

  // alpha_bar[K] < 0.05, i.e. y^K is close to the standard-normal prior.
  [[nodiscard]] bool reaches_prior() const noexcept { return alpha_bar.back() < 0.05; }
  // Coefficient c_k with mu = (y^k - (beta_k / sqrt(1 - alpha_bar_k)) * eps) / sqrt(alpha_k).
  [[nodiscard]] double eps_coefficient(int k) const;

  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;
};

// Linear beta schedule between beta_start and beta_end over K steps.
NoiseSchedule build_schedule(int steps, double beta_start, double beta_end);

// Per-coordinate affine standardization fitted on training data.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(std::span<const std::vector<double>> rows);
  static Standardizer identity(std::size_t width);
  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
  [[nodiscard]] std::vector<double> invert(std::span<const double> z) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

enum class LossMode { Mu, Eps };
std::string to_string(LossMode m);
LossMode loss_mode_from_string(const std::string& name);

// Everything needed to sample plans: network, schedule and the data
// standardizers that define the ego-frame diffusion space.
struct PlannerModel {
  InputLayout layout;
  DenoiserParams params;
  NoiseSchedule schedule;
  Standardizer plan_norm;
  Standardizer context_norm;

  friend bool operator==(const PlannerModel&, const PlannerModel&) = default;
};

// Ego-frame quantities derived from a (scene, forecast) pair.
struct Conditioning {
  std::string scene_id;
  FrameTransform frame;
  std::vector<double> context;  // standardized
  Forecast local_forecast;      // ego frame
  Scene local_scene;            // ego frame
};

std::vector<double> flatten(const Trajectory& t);
Trajectory unflatten(std::span<const double> xy, double dt);
std::vector<double> raw_context(const Scene& local_scene, const Forecast& local_forecast);

Conditioning make_conditioning(const PlannerModel& model, const Scene& scene, const Forecast& forecast);
// Standardized ego-frame vector -> world-frame plan.
Trajectory decode_plan(const PlannerModel& model, const Conditioning& cond, std::span<const double> z);

// Fits plan/context standardizers on the ego-frame training data.
void fit_standardizers(PlannerModel& model, const std::vector<Scene>& scenes, const std::vector<Forecast>& forecasts);

PlannerModel make_planner(const InputLayout& layout, const Architecture& arch, const NoiseSchedule& schedule,
                          const std::vector<Scene>& scenes, const std::vector<Forecast>& forecasts,
                          std::uint64_t seed);

// y^k = sqrt(alpha_bar_k) y0 + sqrt(1 - alpha_bar_k) noise; k = 0 returns y0.
std::vector<double> forward_noise(std::span<const double> y0, int k, std::span<const double> noise,
                                  const NoiseSchedule& schedule);

// Mean of q(y^{k-1} | y^k, y^0).
std::vector<double> posterior_mean(std::span<const double> y0, std::span<const double> yk, int k,
                                   const NoiseSchedule& schedule);

// Isotropic Gaussian log density. Throws on variance <= 0 or size mismatch.
double gaussian_logpdf(std::span<const double> x, std::span<const double> mean, double variance);

struct StepRecord {
  int k = 0;
  std::vector<double> state;   // y^k
  std::vector<double> action;  // y^{k-1}
  std::vector<double> mean;
  double log_likelihood = 0.0;
  std::string scene_id;
};

struct StepResult {
  std::vector<double> next;
  StepRecord record;
};

struct MeanEvaluation {
  std::vector<double> mean;
  std::vector<double> eps_hat;
  ForwardCache cache;
};

// mu_theta(y^k, context, k) through the noise-prediction parameterization.
std::vector<double> transition_mean(const DenoiserParams& params, std::span<const double> yk, int k,
                                    std::span<const double> context, const NoiseSchedule& schedule);
MeanEvaluation transition_mean_with_cache(const DenoiserParams& params, std::span<const double> yk, int k,
                                          std::span<const double> context, const NoiseSchedule& schedule);

struct ReverseOptions {
  bool deterministic = false;
};

// Samples y^{k-1} ~ N(mean, reverse_variance[k] I) and records the transition.
// `mean_shift` (optional) is added to mu_theta before sampling.
StepResult reverse_step(const DenoiserParams& params, std::span<const double> yk, int k,
                        std::span<const double> context, const NoiseSchedule& schedule, Rng& rng,
                        ReverseOptions options = {}, std::span<const double> mean_shift = {});

struct SampledPlan {
  Trajectory plan;              // world frame
  std::vector<double> plan_z;   // standardized ego-frame y^0
  std::vector<StepRecord> records;  // k = K..1

  [[nodiscard]] double log_likelihood_sum() const;
};

using StepFunction = std::function<StepResult(std::span<const double> yk, int k, Rng& rng)>;

// Draws y^K ~ N(0, I) and applies `step` for k = K..1.
SampledPlan run_reverse_chain(const PlannerModel& model, const Conditioning& cond, Rng& rng, const StepFunction& step);

SampledPlan sample_plan(const PlannerModel& model, const Scene& scene, const Forecast& forecast, Rng& rng,
                        ReverseOptions options = {});
SampledPlan sample_plan(const PlannerModel& model, const Conditioning& cond, Rng& rng, ReverseOptions options = {});

// Supervised pair in the standardized ego-frame diffusion space.
struct TrainingExample {
  std::string scene_id;
  std::vector<double> context;
  std::vector<double> plan;
};

std::vector<TrainingExample> prepare_examples(const PlannerModel& model, const std::vector<Scene>& scenes,
                                              const std::vector<Forecast>& forecasts);

struct LossAndGrads {
  double loss = 0.0;
  DenoiserParams grads;
};

// Monte-Carlo DDPM objective over a batch: one uniformly drawn step and one
// noise draw per example. The rng fully determines (k, noise).
LossAndGrads ddpm_loss_and_grads(const DenoiserParams& params, std::span<const TrainingExample> batch,
                                 const NoiseSchedule& schedule, Rng& rng, LossMode mode = LossMode::Mu);

struct PretrainConfig {
  int steps = 2000;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  LossMode loss_mode = LossMode::Mu;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  PlannerModel model;
  OptimizerState optimizer;
  std::vector<double> losses;
};

PretrainResult pretrain(const PlannerModel& model, const std::vector<TrainingExample>& examples,
                        const PretrainConfig& config);

// Trailing moving average with the given window.
std::vector<double> smooth(std::span<const double> values, std::size_t window);

}  // namespace crowdplan
