#include "crowdplan/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "crowdplan/errors.hpp"

namespace crowdplan {
namespace {

void check_step(const NoiseSchedule& schedule, int k) {
  if (k < 1 || k > schedule.steps)
    throw std::invalid_argument("diffusion step k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(schedule.steps) + "]");
}

void check_same_size(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

double NoiseSchedule::eps_coefficient(int k) const {
  check_step(*this, k);
  return beta[k] / std::sqrt(1.0 - alpha_bar[k]);
}

NoiseSchedule build_schedule(int steps, double beta_start, double beta_end) {
  if (steps <= 0) throw std::invalid_argument("build_schedule: K must be positive");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw std::invalid_argument("build_schedule: need 0 < beta_start <= beta_end < 1");

  NoiseSchedule s;
  s.steps = steps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  const auto n = static_cast<std::size_t>(steps) + 1;
  s.beta.assign(n, 0.0);
  s.alpha.assign(n, 1.0);
  s.alpha_bar.assign(n, 1.0);
  s.beta_tilde.assign(n, 0.0);
  s.reverse_variance.assign(n, 0.0);
  for (int k = 1; k <= steps; ++k) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(k - 1) / static_cast<double>(steps - 1);
    s.beta[k] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[k] = 1.0 - s.beta[k];
    s.alpha_bar[k] = s.alpha_bar[k - 1] * s.alpha[k];
    s.beta_tilde[k] = (1.0 - s.alpha_bar[k - 1]) / (1.0 - s.alpha_bar[k]) * s.beta[k];
    s.reverse_variance[k] = s.beta_tilde[k];
  }
  s.reverse_variance[1] = steps >= 2 ? s.beta_tilde[2] : s.beta[1];
  return s;
}

Standardizer Standardizer::fit(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw std::invalid_argument("Standardizer::fit: no rows");
  const std::size_t w = rows.front().size();
  Standardizer s{std::vector<double>(w, 0.0), std::vector<double>(w, 0.0)};
  for (const auto& r : rows) {
    if (r.size() != w) throw std::invalid_argument("Standardizer::fit: ragged rows");
    for (std::size_t i = 0; i < w; ++i) s.mean[i] += r[i];
  }
  const auto n = static_cast<double>(rows.size());
  for (double& m : s.mean) m /= n;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < w; ++i) s.scale[i] += (r[i] - s.mean[i]) * (r[i] - s.mean[i]);
  for (double& v : s.scale) {
    v = std::sqrt(v / n);
    // Constant coordinates (e.g. the ego's last observed position) keep unit scale.
    if (v < 1e-6) v = 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(std::size_t width) {
  return Standardizer{std::vector<double>(width, 0.0), std::vector<double>(width, 1.0)};
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("Standardizer::apply: width mismatch");
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean[i]) / scale[i];
  return z;
}

std::vector<double> Standardizer::invert(std::span<const double> z) const {
  if (z.size() != mean.size()) throw std::invalid_argument("Standardizer::invert: width mismatch");
  std::vector<double> x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] * scale[i] + mean[i];
  return x;
}

std::string to_string(LossMode m) { return m == LossMode::Mu ? "mu" : "eps"; }

LossMode loss_mode_from_string(const std::string& name) {
  if (name == "mu") return LossMode::Mu;
  if (name == "eps") return LossMode::Eps;
  throw std::invalid_argument("unknown loss mode '" + name + "' (expected mu or eps)");
}

std::vector<double> flatten(const Trajectory& t) {
  std::vector<double> out;
  out.reserve(2 * t.size());
  for (Vec2 p : t.points) {
    out.push_back(p.x);
    out.push_back(p.y);
  }
  return out;
}

Trajectory unflatten(std::span<const double> xy, double dt) {
  if (xy.size() % 2 != 0) throw std::invalid_argument("unflatten: odd length");
  Trajectory t{{}, dt};
  t.points.reserve(xy.size() / 2);
  for (std::size_t i = 0; i < xy.size(); i += 2) t.points.push_back({xy[i], xy[i + 1]});
  return t;
}

std::vector<double> raw_context(const Scene& local_scene, const Forecast& local_forecast) {
  std::vector<double> ctx = flatten(local_scene.ego_history);
  for (const auto& t : local_forecast.neighbor_futures) {
    const auto f = flatten(t);
    ctx.insert(ctx.end(), f.begin(), f.end());
  }
  ctx.push_back(local_scene.ego_goal.x);
  ctx.push_back(local_scene.ego_goal.y);
  return ctx;
}

namespace {

void check_consistent(const InputLayout& layout, const Scene& scene, const Forecast& forecast) {
  if (scene.t_obs() != layout.t_obs || scene.t_fut() != layout.t_fut || scene.num_neighbors() != layout.num_neighbors)
    throw std::invalid_argument("scene " + scene.scene_id + " does not match the planner layout (T_obs=" +
                                std::to_string(layout.t_obs) + ", T_fut=" + std::to_string(layout.t_fut) +
                                ", neighbors=" + std::to_string(layout.num_neighbors) + ")");
  if (forecast.neighbor_futures.size() != scene.num_neighbors())
    throw std::invalid_argument("forecast for scene " + scene.scene_id + " has the wrong neighbor count");
  for (const auto& t : forecast.neighbor_futures)
    if (t.size() != layout.t_fut) throw std::invalid_argument("forecast horizon does not match T_fut");
}

}  // namespace

Conditioning make_conditioning(const PlannerModel& model, const Scene& scene, const Forecast& forecast) {
  check_consistent(model.layout, scene, forecast);
  auto [local, frame] = normalize_frame(scene);
  Conditioning c;
  c.scene_id = scene.scene_id;
  c.frame = frame;
  c.local_forecast = to_local(forecast, frame);
  c.context = model.context_norm.apply(raw_context(local, c.local_forecast));
  c.local_scene = std::move(local);
  return c;
}

Trajectory decode_plan(const PlannerModel& model, const Conditioning& cond, std::span<const double> z) {
  const auto xy = model.plan_norm.invert(z);
  return cond.frame.to_world(unflatten(xy, cond.local_scene.dt()));
}

void fit_standardizers(PlannerModel& model, const std::vector<Scene>& scenes, const std::vector<Forecast>& forecasts) {
  if (scenes.size() != forecasts.size()) throw std::invalid_argument("fit_standardizers: one forecast per scene required");
  std::vector<std::vector<double>> plans;
  std::vector<std::vector<double>> contexts;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    check_consistent(model.layout, scenes[i], forecasts[i]);
    auto [local, frame] = normalize_frame(scenes[i]);
    plans.push_back(flatten(local.ego_future_gt));
    contexts.push_back(raw_context(local, to_local(forecasts[i], frame)));
  }
  model.plan_norm = Standardizer::fit(plans);
  model.context_norm = Standardizer::fit(contexts);
}

PlannerModel make_planner(const InputLayout& layout, const Architecture& arch, const NoiseSchedule& schedule,
                          const std::vector<Scene>& scenes, const std::vector<Forecast>& forecasts,
                          std::uint64_t seed) {
  PlannerModel m;
  m.layout = layout;
  m.params = init_params(arch, layout, seed);
  m.schedule = schedule;
  fit_standardizers(m, scenes, forecasts);
  return m;
}

std::vector<double> forward_noise(std::span<const double> y0, int k, std::span<const double> noise,
                                  const NoiseSchedule& schedule) {
  check_same_size(y0, noise, "forward_noise");
  if (k < 0 || k > schedule.steps) throw std::invalid_argument("forward_noise: step out of range");
  const double a = std::sqrt(schedule.alpha_bar[k]);
  const double b = std::sqrt(1.0 - schedule.alpha_bar[k]);
  std::vector<double> out(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) out[i] = k == 0 ? y0[i] : a * y0[i] + b * noise[i];
  return out;
}

std::vector<double> posterior_mean(std::span<const double> y0, std::span<const double> yk, int k,
                                   const NoiseSchedule& schedule) {
  check_same_size(y0, yk, "posterior_mean");
  check_step(schedule, k);
  const double denom = 1.0 - schedule.alpha_bar[k];
  const double c0 = std::sqrt(schedule.alpha_bar[k - 1]) * schedule.beta[k] / denom;
  const double ck = std::sqrt(schedule.alpha[k]) * (1.0 - schedule.alpha_bar[k - 1]) / denom;
  std::vector<double> out(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) out[i] = c0 * y0[i] + ck * yk[i];
  return out;
}

double gaussian_logpdf(std::span<const double> x, std::span<const double> mean, double variance) {
  check_same_size(x, mean, "gaussian_logpdf");
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian_logpdf: variance must be positive");
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - mean[i]) * (x[i] - mean[i]);
  const auto d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * variance) - 0.5 * sq / variance;
}

MeanEvaluation transition_mean_with_cache(const DenoiserParams& params, std::span<const double> yk, int k,
                                          std::span<const double> context, const NoiseSchedule& schedule) {
  check_step(schedule, k);
  const std::size_t fixed = yk.size() + context.size();
  if (params.arch.input_width() < fixed) throw std::invalid_argument("transition_mean: context wider than network input");
  const std::size_t embed = params.arch.input_width() - fixed;
  const auto input = assemble_input(yk, k, embed, context);
  auto fwd = forward(params, input);
  if (fwd.output.size() != yk.size()) throw std::invalid_argument("transition_mean: network output width != plan width");
  const double coef = schedule.eps_coefficient(k);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha[k]);
  MeanEvaluation ev;
  ev.mean.resize(yk.size());
  for (std::size_t i = 0; i < yk.size(); ++i) ev.mean[i] = (yk[i] - coef * fwd.output[i]) * inv_sqrt_alpha;
  ev.eps_hat = std::move(fwd.output);
  ev.cache = std::move(fwd.cache);
  return ev;
}

std::vector<double> transition_mean(const DenoiserParams& params, std::span<const double> yk, int k,
                                    std::span<const double> context, const NoiseSchedule& schedule) {
  return transition_mean_with_cache(params, yk, k, context, schedule).mean;
}

StepResult reverse_step(const DenoiserParams& params, std::span<const double> yk, int k,
                        std::span<const double> context, const NoiseSchedule& schedule, Rng& rng,
                        ReverseOptions options, std::span<const double> mean_shift) {
  check_step(schedule, k);
  StepResult r;
  r.record.k = k;
  r.record.state.assign(yk.begin(), yk.end());
  r.record.mean = transition_mean(params, yk, k, context, schedule);
  if (!mean_shift.empty()) {
    check_same_size(mean_shift, yk, "reverse_step mean shift");
    for (std::size_t i = 0; i < yk.size(); ++i) r.record.mean[i] += mean_shift[i];
  }
  for (double m : r.record.mean)
    if (!std::isfinite(m))
      throw NumericalError("reverse_step: non-finite transition mean at k=" + std::to_string(k) +
                           "; aborting reverse chain");
  const double var = schedule.reverse_variance[k];
  const double sd = std::sqrt(var);
  r.next = r.record.mean;
  if (!options.deterministic)
    for (double& v : r.next) v += sd * rng.normal();
  r.record.action = r.next;
  r.record.log_likelihood = gaussian_logpdf(r.record.action, r.record.mean, var);
  return r;
}

double SampledPlan::log_likelihood_sum() const {
  double s = 0.0;
  for (const auto& r : records) s += r.log_likelihood;
  return s;
}

SampledPlan run_reverse_chain(const PlannerModel& model, const Conditioning& cond, Rng& rng, const StepFunction& step) {
  const std::size_t dim = model.layout.plan_width();
  std::vector<double> y(dim);
  for (double& v : y) v = rng.normal();
  SampledPlan out;
  out.records.reserve(static_cast<std::size_t>(model.schedule.steps));
  for (int k = model.schedule.steps; k >= 1; --k) {
    StepResult r = step(y, k, rng);
    r.record.scene_id = cond.scene_id;
    y = std::move(r.next);
    out.records.push_back(std::move(r.record));
  }
  out.plan = decode_plan(model, cond, y);
  out.plan_z = std::move(y);
  return out;
}

SampledPlan sample_plan(const PlannerModel& model, const Conditioning& cond, Rng& rng, ReverseOptions options) {
  return run_reverse_chain(model, cond, rng, [&](std::span<const double> yk, int k, Rng& r) {
    return reverse_step(model.params, yk, k, cond.context, model.schedule, r, options);
  });
}

SampledPlan sample_plan(const PlannerModel& model, const Scene& scene, const Forecast& forecast, Rng& rng,
                        ReverseOptions options) {
  return sample_plan(model, make_conditioning(model, scene, forecast), rng, options);
}

std::vector<TrainingExample> prepare_examples(const PlannerModel& model, const std::vector<Scene>& scenes,
                                              const std::vector<Forecast>& forecasts) {
  if (scenes.size() != forecasts.size()) throw std::invalid_argument("prepare_examples: one forecast per scene required");
  std::vector<TrainingExample> out;
  out.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    auto cond = make_conditioning(model, scenes[i], forecasts[i]);
    out.push_back({scenes[i].scene_id, std::move(cond.context),
                   model.plan_norm.apply(flatten(cond.local_scene.ego_future_gt))});
  }
  return out;
}

LossAndGrads ddpm_loss_and_grads(const DenoiserParams& params, std::span<const TrainingExample> batch,
                                 const NoiseSchedule& schedule, Rng& rng, LossMode mode) {
  if (batch.empty()) throw std::invalid_argument("ddpm_loss_and_grads: empty batch");
  LossAndGrads out{0.0, DenoiserParams{params.arch, std::vector<double>(params.size(), 0.0)}};
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (const auto& ex : batch) {
    const int k = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(schedule.steps)));
    std::vector<double> noise(ex.plan.size());
    for (double& v : noise) v = rng.normal();
    const auto yk = forward_noise(ex.plan, k, noise, schedule);
    const auto ev = transition_mean_with_cache(params, yk, k, ex.context, schedule);

    std::vector<double> grad_eps(yk.size());
    double sq = 0.0;
    if (mode == LossMode::Mu) {
      const auto target = posterior_mean(ex.plan, yk, k, schedule);
      const double dmean_deps = -schedule.eps_coefficient(k) / std::sqrt(schedule.alpha[k]);
      for (std::size_t i = 0; i < yk.size(); ++i) {
        const double diff = ev.mean[i] - target[i];
        sq += diff * diff;
        grad_eps[i] = 2.0 * diff * dmean_deps * inv_b;
      }
    } else {
      for (std::size_t i = 0; i < yk.size(); ++i) {
        const double diff = ev.eps_hat[i] - noise[i];
        sq += diff * diff;
        grad_eps[i] = 2.0 * diff * inv_b;
      }
    }
    out.loss += sq * inv_b;
    backward_into(params, ev.cache, grad_eps, out.grads.values);
  }
  if (!std::isfinite(out.loss)) throw NumericalError("ddpm_loss_and_grads: non-finite loss");
  return out;
}

PretrainResult pretrain(const PlannerModel& model, const std::vector<TrainingExample>& examples,
                        const PretrainConfig& config) {
  if (examples.empty()) throw std::invalid_argument("pretrain: no training examples");
  if (config.batch_size == 0) throw std::invalid_argument("pretrain: batch size must be positive");
  PretrainResult r{model, OptimizerState::for_params(model.params, config.learning_rate), {}};
  r.losses.reserve(static_cast<std::size_t>(std::max(config.steps, 0)));
  const Rng root = Rng(config.seed).split("pretrain");
  std::vector<TrainingExample> batch(config.batch_size);
  for (int step = 0; step < config.steps; ++step) {
    Rng rng = root.split(static_cast<std::uint64_t>(step));
    for (auto& b : batch) b = examples[rng.uniform_index(examples.size())];
    auto lg = ddpm_loss_and_grads(r.model.params, batch, r.model.schedule, rng, config.loss_mode);
    auto upd = adam_step(r.model.params, lg.grads.values, r.optimizer);
    r.model.params = std::move(upd.params);
    r.optimizer = std::move(upd.state);
    r.losses.push_back(lg.loss);
  }
  return r;
}

std::vector<double> smooth(std::span<const double> values, std::size_t window) {
  if (window == 0) throw std::invalid_argument("smooth: window must be positive");
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    if (i >= window) acc -= values[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace crowdplan
