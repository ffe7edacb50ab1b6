#include "crowdplan/ddpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "crowdplan/errors.hpp"

namespace crowdplan {

void FinetuneConfig::validate() const {
  if (outer_iterations < 0) throw std::invalid_argument("finetune: outer iterations must be >= 0");
  if (inner_epochs < 1) throw std::invalid_argument("finetune: inner epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("finetune: batch size must be >= 1");
  if (!(clip_radius >= 0.0)) throw std::invalid_argument("finetune: clip radius must be >= 0");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("finetune: learning rate must be >= 0");
  if (rewards.empty()) throw std::invalid_argument("finetune: at least one reward spec required");
  for (const auto& r : rewards) r.validate();
}

std::size_t RolloutBatch::record_count() const {
  std::size_t n = 0;
  for (const auto& s : scenes) n += s.records.size();
  return n;
}

std::vector<int> evaluate_reward(RewardKind kind, std::span<const Trajectory> plans, std::span<const Scene> scenes,
                                 std::span<const Forecast> forecasts, double threshold) {
  std::vector<int> r(plans.size());
  for (std::size_t i = 0; i < plans.size(); ++i) {
    switch (kind) {
      case RewardKind::Collision:
        r[i] = reward_collision(plans[i], forecasts[i], threshold);
        break;
      case RewardKind::Success:
        r[i] = reward_success(plans[i], scenes[i].ego_goal, threshold);
        break;
      case RewardKind::Discomfort:
        r[i] = reward_discomfort(with_anchor(scenes[i].ego_history.back(), plans[i]), scenes[i].dt(), threshold);
        break;
    }
  }
  return r;
}

std::vector<double> normalize_advantages(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("normalize_advantages: empty batch");
  std::vector<double> a(rewards.size(), 0.0);
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); })) return a;
  const auto n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::max(std::sqrt(var / n), kAdvantageStabilizer);
  for (std::size_t i = 0; i < rewards.size(); ++i) a[i] = (rewards[i] - mean) / sd;
  return a;
}

RolloutBatch collect_rollouts(const PlannerModel& model, std::span<const Scene> scenes,
                              std::span<const Forecast> forecasts, std::span<const RewardSpec> specs,
                              const ShapingOptions& shaping, Rng& rng, std::uint64_t snapshot_id) {
  if (scenes.empty()) throw std::invalid_argument("collect_rollouts: empty batch");
  if (scenes.size() != forecasts.size()) throw std::invalid_argument("collect_rollouts: one forecast per scene required");
  if (specs.empty()) throw std::invalid_argument("collect_rollouts: no reward specs");

  RolloutBatch batch;
  batch.snapshot_id = snapshot_id;
  std::vector<Trajectory> plans;
  plans.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    Rng scene_rng = rng.split(static_cast<std::uint64_t>(i));
    auto cond = make_conditioning(model, scenes[i], forecasts[i]);
    auto sampled = sample_plan(model, cond, scene_rng);
    for (const auto& rec : sampled.records)
      if (!std::isfinite(rec.log_likelihood)) throw NumericalError("collect_rollouts: non-finite log-likelihood");
    SceneRollout ro;
    ro.scene_id = scenes[i].scene_id;
    ro.context = std::move(cond.context);
    ro.records = std::move(sampled.records);
    ro.plan = sampled.plan;
    plans.push_back(std::move(sampled.plan));
    batch.scenes.push_back(std::move(ro));
  }
  std::vector<std::vector<int>> per_spec;
  for (const auto& spec : specs) {
    RewardEvaluator eval = [&](double eps) { return evaluate_reward(spec.kind, plans, scenes, forecasts, eps); };
    RewardShaping sh;
    sh.spec = spec;
    if (shaping.dynamic_thresholding) {
      sh.threshold = dynamic_threshold(eval, scenes.size(), spec.initial_threshold, shaping.thresholding);
    } else {
      sh.threshold.threshold = spec.initial_threshold;
      sh.threshold.rewards = eval(spec.initial_threshold);
      int sum = std::accumulate(sh.threshold.rewards.begin(), sh.threshold.rewards.end(), 0);
      sh.threshold.trace.push_back({0, spec.initial_threshold, sum});
    }
    sh.mean_reward = std::accumulate(sh.threshold.rewards.begin(), sh.threshold.rewards.end(), 0.0) /
                     static_cast<double>(scenes.size());
    per_spec.push_back(sh.threshold.rewards);
    batch.shaping.push_back(std::move(sh));
  }

  batch.rewards = combine_rewards(per_spec, specs);
  for (std::size_t i = 0; i < batch.scenes.size(); ++i) {
    batch.scenes[i].total_reward = batch.rewards[i];
    for (const auto& v : per_spec) batch.scenes[i].rewards.push_back(v[i]);
  }
  const auto n = static_cast<double>(batch.rewards.size());
  batch.reward_mean = std::accumulate(batch.rewards.begin(), batch.rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : batch.rewards) var += (r - batch.reward_mean) * (r - batch.reward_mean);
  batch.reward_std = std::sqrt(var / n);
  batch.advantages = normalize_advantages(batch.rewards);
  return batch;
}

SurrogateTerm surrogate_term(std::span<const double> action, std::span<const double> mean, double variance,
                             double old_log_likelihood, double advantage, double clip_radius) {
  SurrogateTerm t;
  const double logp = gaussian_logpdf(action, mean, variance);
  t.ratio = std::exp(logp - old_log_likelihood);
  if (!std::isfinite(t.ratio))
    throw NumericalError("importance ratio is not finite (log p = " + std::to_string(logp) +
                         ", log p_old = " + std::to_string(old_log_likelihood) + ")");
  const double unclipped = t.ratio * advantage;
  t.objective = unclipped;
  if (clip_radius > 0.0) {
    const double clipped = std::clamp(t.ratio, 1.0 - clip_radius, 1.0 + clip_radius) * advantage;
    if (clipped < unclipped) {
      t.objective = clipped;
      t.clipped = true;
    }
  }
  t.grad_mean.assign(mean.size(), 0.0);
  if (!t.clipped && advantage != 0.0) {
    const double w = advantage * t.ratio / variance;
    for (std::size_t i = 0; i < mean.size(); ++i) t.grad_mean[i] = w * (action[i] - mean[i]);
  }
  return t;
}

namespace {

void check_batch(const RolloutBatch& batch) {
  if (batch.advantages.size() != batch.scenes.size())
    throw std::invalid_argument("rollout batch: advantages do not match scenes");
  if (batch.record_count() == 0) throw std::invalid_argument("rollout batch: no step records");
}

template <typename PerRecord>
void for_each_record(const DenoiserParams& params, const RolloutBatch& batch, const NoiseSchedule& schedule,
                     std::span<double> grads, PerRecord&& per_record) {
  const double inv_n = 1.0 / static_cast<double>(batch.record_count());
  std::vector<double> grad_eps;
  for (std::size_t s = 0; s < batch.scenes.size(); ++s) {
    const auto& ro = batch.scenes[s];
    const double adv = batch.advantages[s];
    for (const auto& rec : ro.records) {
      auto ev = transition_mean_with_cache(params, rec.state, rec.k, ro.context, schedule);
      const auto grad_mean = per_record(rec, ev.mean, adv);
      if (grad_mean.empty()) continue;
      const double dmean_deps = -schedule.eps_coefficient(rec.k) / std::sqrt(schedule.alpha[rec.k]);
      grad_eps.assign(grad_mean.size(), 0.0);
      bool any = false;
      for (std::size_t i = 0; i < grad_mean.size(); ++i) {
        grad_eps[i] = grad_mean[i] * dmean_deps * inv_n;
        any = any || grad_eps[i] != 0.0;
      }
      if (any) backward_into(params, ev.cache, grad_eps, grads);
    }
  }
}

}  // namespace

SurrogateGradient surrogate_gradient(const DenoiserParams& params, const RolloutBatch& batch,
                                     const NoiseSchedule& schedule, double clip_radius) {
  check_batch(batch);
  SurrogateGradient out{DenoiserParams{params.arch, std::vector<double>(params.size(), 0.0)}, {}};
  double ratio_sum = 0.0;
  double objective_sum = 0.0;
  std::size_t clipped = 0;
  for_each_record(params, batch, schedule, out.grads.values,
                  [&](const StepRecord& rec, const std::vector<double>& mean, double adv) {
                    auto term = surrogate_term(rec.action, mean, schedule.reverse_variance[rec.k],
                                               rec.log_likelihood, adv, clip_radius);
                    ratio_sum += term.ratio;
                    objective_sum += term.objective;
                    clipped += term.clipped ? 1 : 0;
                    return std::move(term.grad_mean);
                  });
  const auto n = static_cast<double>(batch.record_count());
  out.stats.mean_ratio = ratio_sum / n;
  out.stats.objective = objective_sum / n;
  out.stats.clip_fraction = static_cast<double>(clipped) / n;
  return out;
}

DenoiserParams score_function_gradient(const DenoiserParams& params, const RolloutBatch& batch,
                                       const NoiseSchedule& schedule) {
  check_batch(batch);
  DenoiserParams g{params.arch, std::vector<double>(params.size(), 0.0)};
  for_each_record(params, batch, schedule, g.values,
                  [&](const StepRecord& rec, const std::vector<double>& mean, double adv) {
                    const double var = schedule.reverse_variance[rec.k];
                    std::vector<double> gm(mean.size());
                    for (std::size_t i = 0; i < mean.size(); ++i) gm[i] = adv * (rec.action[i] - mean[i]) / var;
                    return gm;
                  });
  return g;
}

UpdateResult ddpo_update(const DenoiserParams& params, const RolloutBatch& batch, const NoiseSchedule& schedule,
                         const OptimizerState& optimizer, double clip_radius, int inner_epochs) {
  if (inner_epochs < 1) throw std::invalid_argument("ddpo_update: inner epochs must be >= 1");
  check_batch(batch);
  UpdateResult r{params, optimizer, {}};
  const bool has_signal = std::any_of(batch.advantages.begin(), batch.advantages.end(), [](double a) { return a != 0.0; });
  double ratio_acc = 0.0, clip_acc = 0.0, obj_acc = 0.0;
  for (int epoch = 0; epoch < inner_epochs; ++epoch) {
    auto sg = surrogate_gradient(r.params, batch, schedule, clip_radius);
    ratio_acc += sg.stats.mean_ratio;
    clip_acc += sg.stats.clip_fraction;
    obj_acc += sg.stats.objective;
    if (!has_signal) continue;
    // The optimizer minimizes, the surrogate is maximized.
    for (double& g : sg.grads.values) g = -g;
    auto step = adam_step(r.params, sg.grads.values, r.optimizer);
    r.params = std::move(step.params);
    r.optimizer = std::move(step.state);
    ++r.stats.optimizer_steps;
  }
  r.stats.mean_ratio = ratio_acc / inner_epochs;
  r.stats.clip_fraction = clip_acc / inner_epochs;
  r.stats.objective = obj_acc / inner_epochs;
  return r;
}

FinetuneResult finetune(const PlannerModel& model, const std::vector<Scene>& pool, const std::vector<Forecast>& forecasts,
                        const FinetuneConfig& config, const IterationCallback& on_iteration) {
  config.validate();
  if (pool.empty()) throw std::invalid_argument("finetune: empty scene pool");
  if (pool.size() != forecasts.size()) throw std::invalid_argument("finetune: one forecast per scene required");

  FinetuneResult res{model, OptimizerState::for_params(model.params, config.learning_rate), {}};
  const double initial_scale = model.params.mean_abs();
  const Rng root = Rng(config.seed).split("finetune");

  std::vector<std::size_t> order(pool.size());
  std::vector<Scene> batch_scenes;
  std::vector<Forecast> batch_forecasts;

  for (int it = 0; it < config.outer_iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = root.split(static_cast<std::uint64_t>(it));

    // Snapshot theta_old once per outer iteration, before rollouts.
    const PlannerModel snapshot = res.model;

    std::iota(order.begin(), order.end(), std::size_t{0});
    batch_scenes.clear();
    batch_forecasts.clear();
    Rng pick = rng.split("batch");
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      std::size_t idx;
      if (pool.size() >= config.batch_size) {
        const std::size_t j = b + pick.uniform_index(order.size() - b);
        std::swap(order[b], order[j]);
        idx = order[b];
      } else {
        idx = pick.uniform_index(pool.size());
      }
      batch_scenes.push_back(pool[idx]);
      batch_forecasts.push_back(forecasts[idx]);
    }

    Rng sample_rng = rng.split("rollouts");
    const auto batch = collect_rollouts(snapshot, batch_scenes, batch_forecasts, config.rewards, config.shaping,
                                        sample_rng, static_cast<std::uint64_t>(it));
    auto upd = ddpo_update(res.model.params, batch, res.model.schedule, res.optimizer, config.clip_radius,
                           config.inner_epochs);
    res.model.params = std::move(upd.params);
    res.optimizer = std::move(upd.optimizer);

    if (!res.model.params.finite() ||
        (initial_scale > 0.0 && res.model.params.mean_abs() > config.divergence_factor * initial_scale))
      throw NumericalError("finetune: parameters diverged at iteration " + std::to_string(it) + " (mean |theta| " +
                           std::to_string(res.model.params.mean_abs()) + " vs initial " +
                           std::to_string(initial_scale) + ")");

    IterationLog entry;
    entry.iteration = it;
    for (const auto& sh : batch.shaping) {
      entry.reward_names.push_back(to_string(sh.spec.kind));
      entry.thresholds.push_back(sh.threshold.threshold);
      entry.mean_rewards.push_back(sh.mean_reward);
      entry.threshold_traces.push_back(sh.threshold.trace);
    }
    entry.mean_total_reward = batch.reward_mean;
    entry.mean_ratio = upd.stats.mean_ratio;
    entry.clip_fraction = upd.stats.clip_fraction;
    entry.objective = upd.stats.objective;
    entry.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_iteration) on_iteration(entry, res.model, res.optimizer);
    res.log.push_back(std::move(entry));
  }
  return res;
}

}  // namespace crowdplan
