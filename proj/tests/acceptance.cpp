// End-to-end acceptance gate: one PASS/FAIL line per criterion, nonzero exit
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "crowdplan/cli.hpp"
#include "crowdplan/ddpo.hpp"
#include "crowdplan/denoiser.hpp"
#include "crowdplan/diffusion.hpp"
#include "crowdplan/guidance.hpp"
#include "crowdplan/metrics.hpp"
#include "crowdplan/rewards.hpp"
#include "crowdplan/rng.hpp"
#include "crowdplan/scene.hpp"

using namespace crowdplan;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kFdStep = 1e-6;
constexpr double kFdRelTol = 1e-4;
// Relative error denominator floor for coordinates whose gradient is ~0.
constexpr double kFdRelFloor = 1e-6;
constexpr int kMinGradientConfigs = 20;
constexpr double kLikelihoodTol = 1e-12;
constexpr int kUnbiasedRollouts = 100000;
constexpr double kUnbiasedSe = 3.0;
constexpr double kRatioTol = 1e-12;
constexpr double kLossFraction = 0.20;
constexpr double kAdeFraction = 0.50;
constexpr double kCollisionReduction = 0.30;
constexpr double kSuccessIncrease = 0.10;

// Experiment sizes.
constexpr std::size_t kTrainScenes = 500;
constexpr std::size_t kEvalScenes = 200;
constexpr std::uint64_t kTrainSeed = 0;
constexpr std::uint64_t kEvalSeed = 1;
constexpr int kPretrainSteps = 2000;
constexpr std::size_t kLossWindow = 50;
constexpr int kOuterIterations = 100;
constexpr int kInnerEpochs = 4;
constexpr double kFinetuneLr = 3e-4;
constexpr double kGuidanceScale = 1.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kFdRelFloor}); }

// ---------------------------------------------------------------- shared state

struct World {
  std::vector<Scene> train, eval;
  std::vector<Forecast> train_fc, eval_fc;
  PlannerModel untrained, pretrained;
  std::vector<double> losses;
  EvalThresholds thresholds;
  std::vector<RewardSpec> rewards;
};

std::vector<Trajectory> sample_eval_plans(const PlannerModel& m, const World& w, const GuidanceConfig& g = {}) {
  const Rng root = Rng(0).split("eval");
  std::vector<Trajectory> plans;
  for (std::size_t i = 0; i < w.eval.size(); ++i) {
    Rng rng = root.split(static_cast<std::uint64_t>(i));
    plans.push_back(guided_sample_plan(m, w.eval[i], w.eval_fc[i], g, rng).plan);
  }
  return plans;
}

MetricsReport evaluate(const PlannerModel& m, const World& w, const GuidanceConfig& g = {}) {
  return compute_metrics(sample_eval_plans(m, w, g), w.eval, w.thresholds);
}

// ------------------------------------------------------------------ criterion 1

Outcome gradient_exactness() {
  Rng rng(2024);
  int configs = 0;
  double worst = 0.0;
  std::size_t checked = 0;
  for (int c = 0; c < 24; ++c) {
    InputLayout layout{2 + rng.uniform_index(3), 1 + rng.uniform_index(3), 1 + rng.uniform_index(3),
                       2 + rng.uniform_index(4)};
    const auto arch = default_architecture(layout, 3 + rng.uniform_index(6), 1 + rng.uniform_index(3));
    auto params = init_params(arch, layout, 100 + static_cast<std::uint64_t>(c));
    for (double& v : params.values) v += 0.1 * rng.normal();

    // Network backward against L = g . f(x).
    std::vector<double> x(arch.input_width()), g(arch.output_width());
    for (double& v : x) v = rng.normal();
    for (double& v : g) v = rng.normal();
    auto scalar = [&](const DenoiserParams& p) {
      const auto y = predict(p, x);
      return std::inner_product(y.begin(), y.end(), g.begin(), 0.0);
    };
    const auto grads = backward(params, forward(params, x).cache, g);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto plus = params, minus = params;
      plus.values[i] += kFdStep;
      minus.values[i] -= kFdStep;
      const double fd = (scalar(plus) - scalar(minus)) / (2 * kFdStep);
      worst = std::max(worst, rel_err(grads.values[i], fd));
      ++checked;
    }

    // DDPM objective in both parameterizations.
    const auto schedule = build_schedule(2 + static_cast<int>(rng.uniform_index(6)), 1e-3, 0.3);
    std::vector<TrainingExample> batch(1 + rng.uniform_index(4));
    for (auto& ex : batch) {
      ex.context.resize(layout.context_width());
      ex.plan.resize(layout.plan_width());
      for (double& v : ex.context) v = rng.normal();
      for (double& v : ex.plan) v = rng.normal();
    }
    for (LossMode mode : {LossMode::Mu, LossMode::Eps}) {
      const Rng draw = rng.split(static_cast<std::uint64_t>(c));
      Rng r0 = draw;
      const auto lg = ddpm_loss_and_grads(params, batch, schedule, r0, mode);
      for (std::size_t i = 0; i < params.size(); ++i) {
        auto plus = params, minus = params;
        plus.values[i] += kFdStep;
        minus.values[i] -= kFdStep;
        Rng rp = draw, rm = draw;
        const double fd = (ddpm_loss_and_grads(plus, batch, schedule, rp, mode).loss -
                           ddpm_loss_and_grads(minus, batch, schedule, rm, mode).loss) /
                          (2 * kFdStep);
        worst = std::max(worst, rel_err(lg.grads.values[i], fd));
        ++checked;
      }
    }
    ++configs;
  }
  return {configs >= kMinGradientConfigs && worst < kFdRelTol,
          std::to_string(configs) + " configs, " + std::to_string(checked) + " coordinates, max rel err " +
              fmt("%.2e", worst)};
}

// ------------------------------------------------------------------ criterion 2

Outcome likelihood_exactness(const World& w) {
  Rng rng(77);
  double worst_pdf = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> x(1 + rng.uniform_index(40)), m(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = 3.0 * rng.normal();
      m[i] = 3.0 * rng.normal();
    }
    const double var = std::exp(rng.uniform(-9.0, 2.0));
    double oracle = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      oracle += -0.5 * std::log(2.0 * std::numbers::pi * var) - (x[i] - m[i]) * (x[i] - m[i]) / (2.0 * var);
    worst_pdf = std::max(worst_pdf, std::abs(gaussian_logpdf(x, m, var) - oracle) / std::max(1.0, std::abs(oracle)));
  }

  double worst_rec = 0.0;
  std::size_t records = 0;
  for (const PlannerModel* model : {&w.untrained, &w.pretrained}) {
    for (std::size_t i = 0; i < 40; ++i) {
      Rng r(500 + i);
      const auto sp = sample_plan(*model, w.eval[i], w.eval_fc[i], r);
      const auto cond = make_conditioning(*model, w.eval[i], w.eval_fc[i]);
      for (const auto& rec : sp.records) {
        const auto mu = transition_mean(model->params, rec.state, rec.k, cond.context, model->schedule);
        const double lp = gaussian_logpdf(rec.action, mu, model->schedule.reverse_variance[rec.k]);
        worst_rec = std::max(worst_rec, std::abs(lp - rec.log_likelihood) / std::max(1.0, std::abs(lp)));
        ++records;
      }
    }
  }
  return {worst_pdf <= kLikelihoodTol && worst_rec <= kLikelihoodTol,
          "logpdf max err " + fmt("%.1e", worst_pdf) + ", " + std::to_string(records) + " records max err " +
              fmt("%.1e", worst_rec)};
}

// ------------------------------------------------------------------ criterion 3

Outcome estimator_unbiasedness() {
  const double sigma = 0.5;
  bool ok = true;
  std::string detail;
  for (double mu : {-1.0, 0.5, 2.0}) {
    Rng rng(static_cast<std::uint64_t>(std::llround(1000 + 100 * mu)));
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < kUnbiasedRollouts; ++i) {
      const std::vector<double> y{mu + sigma * rng.normal()}, m{mu};
      const double logp = gaussian_logpdf(y, m, sigma * sigma);
      const double g = surrogate_term(y, m, sigma * sigma, logp, -y[0] * y[0], 0.0).grad_mean[0];
      sum += g;
      sum2 += g * g;
    }
    const double n = kUnbiasedRollouts;
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    const double z = std::abs(mean + 2.0 * mu) / se;
    ok = ok && z <= kUnbiasedSe;
    detail += "mu=" + fmt("%g", mu) + ": " + fmt("%.4f", mean) + " vs " + fmt("%g", -2.0 * mu) + " (" +
              fmt("%.2f", z) + " SE); ";
  }
  detail.pop_back();
  detail.pop_back();
  return {ok, detail};
}

// ------------------------------------------------------------------ criterion 4

Outcome identity_ratios(const World& w) {
  const std::vector<Scene> scenes(w.train.begin(), w.train.begin() + 32);
  const std::vector<Forecast> fc(w.train_fc.begin(), w.train_fc.begin() + 32);
  Rng rng(4);
  auto batch = collect_rollouts(w.pretrained, scenes, fc, w.rewards, ShapingOptions{}, rng, 1);
  double worst = 0.0;
  for (const auto& ro : batch.scenes)
    for (const auto& rec : ro.records) {
      const auto mu = transition_mean(w.pretrained.params, rec.state, rec.k, ro.context, w.pretrained.schedule);
      const auto t = surrogate_term(rec.action, mu, w.pretrained.schedule.reverse_variance[rec.k], rec.log_likelihood,
                                    1.0, 0.2);
      worst = std::max(worst, std::abs(t.ratio - 1.0));
    }
  std::fill(batch.rewards.begin(), batch.rewards.end(), 7.0);
  batch.advantages = normalize_advantages(batch.rewards);
  const auto upd = ddpo_update(w.pretrained.params, batch, w.pretrained.schedule,
                               OptimizerState::for_params(w.pretrained.params, 1e-3), 0.2, 3);
  const bool same = upd.params == w.pretrained.params;
  return {worst <= kRatioTol && same, std::to_string(batch.record_count()) + " records max |r-1| " +
                                          fmt("%.1e", worst) + ", constant-reward update " +
                                          (same ? "bit-identical" : "changed parameters")};
}

// ------------------------------------------------------------------ criterion 5

Outcome pretraining_sanity(World& w) {
  const auto t0 = std::chrono::steady_clock::now();
  PretrainConfig pc;
  pc.steps = kPretrainSteps;
  pc.seed = kTrainSeed;
  const auto res = pretrain(w.untrained, prepare_examples(w.untrained, w.train, w.train_fc), pc);
  w.pretrained = res.model;
  w.losses = res.losses;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto sm = smooth(w.losses, kLossWindow);
  const double initial = sm[kLossWindow - 1];
  const double final = sm.back();
  const double ade_untrained = evaluate(w.untrained, w).ade;
  const double ade_trained = evaluate(w.pretrained, w).ade;
  const bool ok = final <= kLossFraction * initial && ade_trained <= kAdeFraction * ade_untrained;
  return {ok, "smoothed loss " + fmt("%.4f", initial) + " -> " + fmt("%.4f", final) + " (" +
                  fmt("%.1f%%", 100 * final / initial) + "), held-out ADE " + fmt("%.3f", ade_untrained) + " -> " +
                  fmt("%.3f", ade_trained) + " (" + fmt("%.1f%%", 100 * ade_trained / ade_untrained) + "), " +
                  fmt("%.0f s", secs)};
}

// ------------------------------------------------------------------ criterion 6

struct FinetuneRun {
  MetricsReport report;
  double seconds = 0.0;
};

FinetuneRun run_finetune(const World& w, bool dynamic_thresholding) {
  FinetuneConfig cfg;
  cfg.outer_iterations = kOuterIterations;
  cfg.inner_epochs = kInnerEpochs;
  cfg.learning_rate = kFinetuneLr;
  cfg.batch_size = cli::crowdnav_profile().batch_size;
  cfg.rewards = w.rewards;
  cfg.shaping.dynamic_thresholding = dynamic_thresholding;
  cfg.seed = 0;
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = finetune(w.pretrained, w.train, w.train_fc, cfg);
  FinetuneRun out;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.report = evaluate(res.model, w);
  return out;
}

Outcome finetuning_improves(const MetricsReport& before, const FinetuneRun& after) {
  const double col_drop = (before.collision_rate - after.report.collision_rate) / before.collision_rate;
  const double succ_gain = (after.report.success_rate - before.success_rate) / before.success_rate;
  const bool ok = col_drop >= kCollisionReduction && succ_gain >= kSuccessIncrease;
  return {ok, "collision " + fmt("%.3f", before.collision_rate) + " -> " + fmt("%.3f", after.report.collision_rate) +
                  " (" + fmt("%+.1f%%", -100 * col_drop) + ", need <= -30%), success " +
                  fmt("%.3f", before.success_rate) + " -> " + fmt("%.3f", after.report.success_rate) + " (" +
                  fmt("%+.1f%%", 100 * succ_gain) + ", need >= +10%), discomfort " +
                  fmt("%.3f", before.discomfort_rate) + " -> " + fmt("%.3f", after.report.discomfort_rate) + ", " +
                  fmt("%.0f s", after.seconds)};
}

// ------------------------------------------------------------------ criterion 7

struct RefStep {
  int j;
  double eps;
  int sum;
};

// Independent straight-line transcription of the thresholding loop.
std::vector<RefStep> reference_trace(const std::function<int(double)>& total, double B, double eps, int J,
                                     double delta) {
  std::vector<RefStep> out;
  for (int j = 1; j <= J; ++j) {
    const int s = total(eps);
    out.push_back({j, eps, s});
    if (std::abs(s - B / 2) <= delta) break;
    const double alpha = 0.5 / j;
    double eps_new = eps + alpha * eps;
    if (std::abs(total(eps_new) - B / 2) > std::abs(s - B / 2)) eps_new = eps - alpha * eps;
    eps = eps_new;
  }
  out.push_back({0, eps, total(eps)});
  return out;
}

struct Fixture {
  std::string name;
  std::vector<double> values;
  bool reward_if_below;
  double eps0;
  double delta;
  int J;
};

std::vector<Fixture> threshold_fixtures(const World& w) {
  std::vector<Fixture> f{
      {"loose success", {0.1, 0.3, 0.7, 0.9}, true, 1.0, 0.0, 10},
      {"tight success", {0.1, 0.3, 0.7, 0.9}, true, 0.05, 0.0, 10},
      {"balanced collision", {0.2, 0.35, 0.5, 0.8, 1.1, 1.4}, false, 0.6, 0.0, 10},
  };
  // Batches of B = 128 pretrained-policy rollouts per reward, at the default
  // initial thresholds, deviation and budget.
  const ThresholdConfig defaults;
  Rng root(8);
  for (int b = 0; b < 8; ++b) {
    Rng rng = root.split(static_cast<std::uint64_t>(b));
    std::vector<double> dist, goal, jerk;
    for (std::size_t i = 0; i < 128; ++i) {
      const std::size_t s = rng.uniform_index(w.train.size());
      Rng r = rng.split(i);
      const auto plan = sample_plan(w.pretrained, w.train[s], w.train_fc[s], r).plan;
      dist.push_back(min_neighbor_distance(plan, w.train_fc[s].neighbor_futures));
      goal.push_back(distance(plan.back(), w.train[s].ego_goal));
      jerk.push_back(max_jerk(with_anchor(w.train[s].ego_history.back(), plan), plan.dt));
    }
    const double delta = 128.0 / 10.0;
    for (const auto& spec : w.rewards) {
      const std::string tag = " batch " + std::to_string(b);
      if (spec.kind == RewardKind::Collision)
        f.push_back({"collision" + tag, dist, false, spec.initial_threshold, delta, defaults.max_iterations});
      if (spec.kind == RewardKind::Success)
        f.push_back({"success" + tag, goal, true, spec.initial_threshold, delta, defaults.max_iterations});
      if (spec.kind == RewardKind::Discomfort)
        f.push_back({"discomfort" + tag, jerk, true, spec.initial_threshold, delta, defaults.max_iterations});
    }
  }
  return f;
}

Outcome dynamic_thresholding(const World& w, const FinetuneRun& with_dt, const FinetuneRun& without_dt) {
  std::size_t mismatches = 0, over_budget = 0, worse_gap = 0;
  const auto fixtures = threshold_fixtures(w);
  for (const auto& fx : fixtures) {
    auto total = [&](double e) {
      int s = 0;
      for (double v : fx.values) s += fx.reward_if_below ? (v <= e) : (v > e);
      return s;
    };
    RewardEvaluator eval = [&](double e) {
      std::vector<int> r;
      for (double v : fx.values) r.push_back(fx.reward_if_below ? (v <= e) : (v > e));
      return r;
    };
    const double B = static_cast<double>(fx.values.size());
    const auto ref = reference_trace(total, B, fx.eps0, fx.J, fx.delta);
    const auto res = dynamic_threshold(eval, fx.values.size(), fx.eps0, fx.delta, AdaptationSchedule{}, fx.J);
    bool same = res.trace.size() == ref.size();
    for (std::size_t i = 0; same && i < ref.size(); ++i)
      same = res.trace[i].iteration == ref[i].j && res.trace[i].threshold == ref[i].eps &&
             res.trace[i].reward_sum == ref[i].sum;
    mismatches += !same;
    over_budget += res.adjustments > fx.J;
    const double g0 = std::abs(res.trace.front().reward_sum - B / 2);
    const double g1 = std::abs(res.trace.back().reward_sum - B / 2);
    if (g1 > g0) {
      ++worse_gap;
      std::printf("    gap grew on fixture '%s': %g -> %g\n", fx.name.c_str(), g0, g1);
    }
  }
  const double col_dt = with_dt.report.collision_rate, col_no = without_dt.report.collision_rate;
  const bool ablation = col_no >= col_dt;
  const bool ok = mismatches == 0 && over_budget == 0 && worse_gap == 0 && ablation;
  return {ok, std::to_string(fixtures.size()) + " fixtures: " + std::to_string(mismatches) + " trace mismatches, " +
                  std::to_string(over_budget) + " over budget, " + std::to_string(worse_gap) +
                  " with a larger final gap; ablation collision w/ DT " + fmt("%.3f", col_dt) + " vs w/o DT " +
                  fmt("%.3f", col_no) + " (success " + fmt("%.3f", with_dt.report.success_rate) + " vs " +
                  fmt("%.3f", without_dt.report.success_rate) + ")"};
}

// ------------------------------------------------------------------ criterion 8

Outcome guidance_baseline(const World& w) {
  const GuidanceConfig guided{kGuidanceScale, w.thresholds.collision};
  const auto base = evaluate(w.pretrained, w);
  const auto steered = evaluate(w.pretrained, w, guided);

  bool identical = true;
  const Rng root = Rng(0).split("eval");
  for (std::size_t i = 0; i < w.eval.size(); ++i) {
    Rng a = root.split(static_cast<std::uint64_t>(i)), b = a;
    const auto p = sample_plan(w.pretrained, w.eval[i], w.eval_fc[i], a);
    const auto q = guided_sample_plan(w.pretrained, w.eval[i], w.eval_fc[i], GuidanceConfig{0.0, 0.6}, b);
    identical = identical && p.plan == q.plan && p.plan_z == q.plan_z &&
                p.log_likelihood_sum() == q.log_likelihood_sum();
  }
  const bool ok = w.eval.size() >= 100 && steered.mean_min_distance >= base.mean_min_distance && identical;
  return {ok, std::to_string(w.eval.size()) + " scenes, mean min distance s=0 " + fmt("%.4f", base.mean_min_distance) +
                  " vs s=" + fmt("%g", kGuidanceScale) + " " + fmt("%.4f", steered.mean_min_distance) +
                  " (collision " + fmt("%.3f", base.collision_rate) + " vs " + fmt("%.3f", steered.collision_rate) +
                  "), s=0 " + (identical ? "bit-identical" : "differs")};
}

// ------------------------------------------------------------------ criterion 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "crowdplan_acceptance_cli";
  fs::remove_all(root);
  std::vector<std::string> reports, details;
  bool ran = true;
  std::ostringstream quiet;
  auto* saved = std::cout.rdbuf(quiet.rdbuf());
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    fs::create_directories(dir);
    auto at = [&](const char* n) { return (dir / n).string(); };
    ran = ran && cli::run_command({"--seed", "13", "gen", "--scenes", "64", "--out", at("train.jsonl")}) == 0;
    ran = ran && cli::run_command({"--seed", "14", "gen", "--scenes", "32", "--out", at("eval.jsonl")}) == 0;
    ran = ran && cli::run_command({"--seed", "13", "pretrain", "--scenes", at("train.jsonl"), "--out", at("pre.bin"),
                                   "--steps", "150", "--hidden", "32"}) == 0;
    ran = ran && cli::run_command({"--seed", "13", "finetune", "--ckpt", at("pre.bin"), "--scenes", at("train.jsonl"),
                                   "--out", at("ft.bin"), "--iters", "3", "--batch", "16", "--epochs", "2"}) == 0;
    ran = ran && cli::run_command({"--seed", "13", "eval", "--ckpt", at("ft.bin"), "--scenes", at("eval.jsonl"),
                                   "--report", at("report.csv"), "--detail", at("detail.csv")}) == 0;
    reports.push_back(slurp(at("report.csv")));
    details.push_back(slurp(at("detail.csv")));
  }
  std::cout.rdbuf(saved);
  fs::remove_all(root);
  const bool ok = ran && !reports[0].empty() && reports[0] == reports[1] && details[0] == details[1];
  return {ok, std::string("gen -> pretrain -> finetune -> eval twice: ") + (ran ? "" : "a command failed, ") +
                  "summary " + (reports[0] == reports[1] ? "identical" : "differs") + " (" +
                  std::to_string(reports[0].size()) + " bytes), detail " +
                  (details[0] == details[1] ? "identical" : "differs")};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("criterion %d: %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    failures += !o.pass;
  };

  World w;
  const auto profile = cli::crowdnav_profile();
  w.train = generate_scenes(kTrainScenes, profile.scenes, kTrainSeed);
  w.eval = generate_scenes(kEvalScenes, profile.scenes, kEvalSeed);
  w.train_fc = forecast_all(w.train);
  w.eval_fc = forecast_all(w.eval);
  w.thresholds = profile.thresholds;
  w.thresholds.discomfort = cli::jerk_percentile(w.eval, 0.7);
  w.rewards = profile.rewards;
  for (auto& r : w.rewards)
    if (r.kind == RewardKind::Discomfort) r.initial_threshold = cli::jerk_percentile(w.train, 0.7);
  const InputLayout layout{w.train.front().t_obs(), w.train.front().t_fut(), w.train.front().num_neighbors(), 16};
  w.untrained = make_planner(layout, default_architecture(layout), build_schedule(20, 1e-4, 0.3), w.train, w.train_fc,
                             kTrainSeed);

  report(1, "gradient exactness", gradient_exactness());
  const auto pretrain_outcome = pretraining_sanity(w);
  report(2, "likelihood exactness", likelihood_exactness(w));
  report(3, "estimator unbiasedness", estimator_unbiasedness());
  report(4, "identity ratios", identity_ratios(w));
  report(5, "pretraining sanity", pretrain_outcome);

  const auto before = evaluate(w.pretrained, w);
  const auto with_dt = run_finetune(w, true);
  report(6, "fine-tuning improves metrics", finetuning_improves(before, with_dt));
  const auto without_dt = run_finetune(w, false);
  report(7, "dynamic thresholding", dynamic_thresholding(w, with_dt, without_dt));
  report(8, "guidance baseline", guidance_baseline(w));
  report(9, "determinism", cli_determinism());

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
