#include "crowdplan/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>

#include "crowdplan/checkpoint.hpp"
#include "crowdplan/errors.hpp"
#include "crowdplan/forecast.hpp"
#include "crowdplan/guidance.hpp"
#include "crowdplan/plot.hpp"
#include "crowdplan/scene_io.hpp"

namespace crowdplan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

Profile crowdnav_profile() {
  Profile p;
  p.name = "crowdnav";
  p.thresholds = crowdnav_thresholds();
  p.batch_size = 128;
  p.rewards = {{RewardKind::Collision, 4.0, 0.6}, {RewardKind::Success, 5.0, 0.2}, {RewardKind::Discomfort, 1.0, 1.0}};
  return p;
}

Profile ethucy_profile() {
  Profile p;
  p.name = "ethucy";
  p.scenes.t_fut = 12;  // 4.8 s at 2.5 FPS
  p.thresholds = ethucy_thresholds();
  p.batch_size = 8;
  p.rewards = {{RewardKind::Collision, 3.0, 0.2}, {RewardKind::Success, 7.0, 0.5}};
  return p;
}

Profile profile_by_name(const std::string& name) {
  if (name == "crowdnav") return crowdnav_profile();
  if (name == "ethucy") return ethucy_profile();
  throw std::invalid_argument("unknown profile '" + name + "' (expected crowdnav or ethucy)");
}

double jerk_percentile(const std::vector<Scene>& scenes, double quantile) {
  if (scenes.empty()) throw std::invalid_argument("jerk_percentile: no scenes");
  std::vector<double> jerks;
  jerks.reserve(scenes.size());
  for (const auto& s : scenes) jerks.push_back(max_jerk(with_anchor(s.ego_history.back(), s.ego_future_gt), s.dt()));
  std::sort(jerks.begin(), jerks.end());
  const auto idx = static_cast<std::size_t>(quantile * static_cast<double>(jerks.size() - 1) + 0.5);
  return jerks[std::min(idx, jerks.size() - 1)];
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
T pick(const std::optional<T>& v, T fallback) {
  return v ? *v : fallback;
}

struct Paths {
  fs::path root = ".";

  [[nodiscard]] fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : root / path;
  }
  [[nodiscard]] fs::path input(const std::string& p, const char* what) const {
    if (p.empty()) throw UsageError(std::string("missing required path for ") + what);
    auto path = resolve(p);
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError(std::string(what) + " not readable: " + path.string());
    return path;
  }
  [[nodiscard]] fs::path output(const std::string& p, const char* what) const {
    if (p.empty()) throw UsageError(std::string("missing required path for ") + what);
    auto path = resolve(p);
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream probe(path, std::ios::binary | std::ios::app);
    if (!probe) throw IoError(std::string(what) + " not writable: " + path.string());
    return path;
  }
};

void write_resolved_config(const fs::path& output, const json& cfg) {
  fs::path p = output;
  p += ".config.json";
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write resolved config: " + p.string());
  out << cfg.dump(2) << '\n';
}

json scene_config_json(const SceneConfig& c) {
  return {{"num_agents", c.num_agents},     {"t_obs", c.t_obs},
          {"t_fut", c.t_fut},               {"dt", c.dt},
          {"arena_radius", c.arena_radius}, {"arena_margin", c.arena_margin},
          {"speed_min", c.speed_min},       {"speed_max", c.speed_max},
          {"heading_noise_std", c.heading_noise_std}, {"departure_stagger", c.departure_stagger}};
}

json thresholds_json(const EvalThresholds& t) {
  return {{"collision", t.collision}, {"success", t.success}, {"discomfort", t.discomfort}};
}

// ---------------------------------------------------------------------------

struct Common {
  std::string profile = "crowdnav";
  std::optional<std::uint64_t> seed;
};

struct GenOptions {
  std::optional<std::size_t> count;
  std::string out;
  std::optional<std::size_t> agents, t_obs, t_fut, stagger;
  std::optional<double> dt, arena_radius, speed_min, speed_max, heading_noise;
};

struct PretrainOptions {
  std::string scenes, out, loss_log;
  std::optional<int> steps, diffusion_steps;
  std::optional<std::size_t> batch, hidden, depth, embed;
  std::optional<double> lr, beta_start, beta_end;
  std::optional<std::string> loss;
};

struct FinetuneOptions {
  std::string ckpt, scenes, out, log;
  std::optional<int> iters, epochs, dt_iters, checkpoint_every;
  std::optional<std::size_t> batch;
  std::optional<double> clip, lr, dt_deviation, dt_rate;
  std::optional<std::string> rewards;
  bool no_dt = false;
};

struct EvalThresholdOptions {
  std::optional<double> collision, success, jerk;
  std::optional<double> guidance_scale, guidance_dist;
};

struct EvalOptions {
  std::string ckpt, scenes, report, detail;
  EvalThresholdOptions th;
};

struct SampleOptions {
  std::string ckpt, scenes, out;
  EvalThresholdOptions th;
};

struct PlotOptions {
  std::string scenes, out, plans, scene_id;
  std::optional<std::size_t> index;
  EvalThresholdOptions th;
};

// Jerk threshold recorded by `gen` for this scene set, if any.
std::optional<double> header_jerk(const fs::path& scenes_path) {
  const auto h = load_scene_header(scenes_path);
  if (h.contains("jerk_p70") && h["jerk_p70"].is_number()) return h["jerk_p70"].get<double>();
  return std::nullopt;
}

EvalThresholds resolve_thresholds(const Profile& p, const EvalThresholdOptions& o, std::optional<double> data_jerk) {
  return {pick(o.collision, p.thresholds.collision), pick(o.success, p.thresholds.success),
          pick(o.jerk, pick(data_jerk, p.thresholds.discomfort))};
}

GuidanceConfig resolve_guidance(const EvalThresholds& th, const EvalThresholdOptions& o) {
  GuidanceConfig g{pick(o.guidance_scale, 0.0), pick(o.guidance_dist, th.collision)};
  g.validate();
  return g;
}

void add_threshold_flags(CLI::App* sub, EvalThresholdOptions& o, bool guidance) {
  sub->add_option("--collision-threshold", o.collision, "Evaluation collision distance (m)");
  sub->add_option("--success-threshold", o.success, "Evaluation goal distance (m)");
  sub->add_option("--jerk-threshold", o.jerk, "Evaluation discomfort jerk (m/s^3)");
  if (guidance) {
    sub->add_option("--guidance-scale", o.guidance_scale, "Collision-cost guidance scale (0 disables)");
    sub->add_option("--guidance-dist", o.guidance_dist, "Guidance cost activation distance (m)");
  }
}

// ---------------------------------------------------------------------------

int run_gen(const Common& c, const GenOptions& o, const Paths& paths) {
  const Profile p = profile_by_name(c.profile);
  SceneConfig cfg = p.scenes;
  cfg.num_agents = pick(o.agents, cfg.num_agents);
  cfg.t_obs = pick(o.t_obs, cfg.t_obs);
  cfg.t_fut = pick(o.t_fut, cfg.t_fut);
  cfg.dt = pick(o.dt, cfg.dt);
  cfg.arena_radius = pick(o.arena_radius, cfg.arena_radius);
  cfg.speed_min = pick(o.speed_min, cfg.speed_min);
  cfg.speed_max = pick(o.speed_max, cfg.speed_max);
  cfg.heading_noise_std = pick(o.heading_noise, cfg.heading_noise_std);
  cfg.departure_stagger = pick(o.stagger, cfg.departure_stagger);
  const std::size_t count = pick(o.count, std::size_t{500});
  const std::uint64_t seed = pick(c.seed, std::uint64_t{0});
  if (count == 0) throw UsageError("--scenes must be >= 1");

  const auto out = paths.output(o.out, "scene output");
  const auto scenes = generate_scenes(count, cfg, seed);
  json header = {{"profile", p.name},
                 {"seed", seed},
                 {"config", scene_config_json(cfg)},
                 {"jerk_p70", jerk_percentile(scenes, 0.7)}};
  save_scenes(out, scenes, header);
  write_resolved_config(out, {{"command", "gen"}, {"profile", p.name}, {"seed", seed}, {"scenes", count},
                              {"out", out.string()}, {"scene_config", scene_config_json(cfg)}});
  std::cout << "wrote " << count << " scenes to " << out.string() << '\n';
  return 0;
}

InputLayout layout_for(const std::vector<Scene>& scenes, std::size_t embed) {
  if (scenes.empty()) throw std::invalid_argument("scene file has no scenes");
  const auto& s = scenes.front();
  return InputLayout{s.t_obs(), s.t_fut(), s.num_neighbors(), embed};
}

int run_pretrain(const Common& c, const PretrainOptions& o, const Paths& paths) {
  const auto scenes_path = paths.input(o.scenes, "scene file");
  const auto out = paths.output(o.out, "checkpoint output");
  const auto scenes = load_scenes(scenes_path);
  const auto forecasts = forecast_all(scenes);

  const std::uint64_t seed = pick(c.seed, std::uint64_t{0});
  const auto layout = layout_for(scenes, pick(o.embed, std::size_t{16}));
  const auto arch = default_architecture(layout, pick(o.hidden, std::size_t{128}), pick(o.depth, std::size_t{2}));
  const auto schedule = build_schedule(pick(o.diffusion_steps, 20), pick(o.beta_start, 1e-4), pick(o.beta_end, 0.3));

  PretrainConfig pc;
  pc.steps = pick(o.steps, 2000);
  pc.batch_size = pick(o.batch, std::size_t{64});
  pc.learning_rate = pick(o.lr, 1e-3);
  pc.loss_mode = loss_mode_from_string(pick(o.loss, std::string("mu")));
  pc.seed = seed;
  if (pc.steps < 0) throw UsageError("--steps must be >= 0");

  const auto model = make_planner(layout, arch, schedule, scenes, forecasts, seed);
  const auto examples = prepare_examples(model, scenes, forecasts);
  const auto result = pretrain(model, examples, pc);

  json cfg = {{"command", "pretrain"},
              {"profile", c.profile},
              {"seed", seed},
              {"scenes", scenes_path.string()},
              {"out", out.string()},
              {"steps", pc.steps},
              {"batch", pc.batch_size},
              {"lr", pc.learning_rate},
              {"loss", to_string(pc.loss_mode)},
              {"diffusion_steps", schedule.steps},
              {"beta_start", schedule.beta_start},
              {"beta_end", schedule.beta_end},
              {"layer_sizes", arch.layer_sizes},
              {"embed", layout.embed_width}};
  save_checkpoint(out, Checkpoint{result.model, result.optimizer, cfg.dump()});
  write_resolved_config(out, cfg);
  if (!o.loss_log.empty()) {
    const auto log_path = paths.output(o.loss_log, "loss log");
    std::ofstream log(log_path, std::ios::binary);
    log.precision(17);
    log << "step,loss\n";
    for (std::size_t i = 0; i < result.losses.size(); ++i) log << i << ',' << result.losses[i] << '\n';
  }
  const double last = result.losses.empty() ? 0.0 : result.losses.back();
  std::cout << "pretrained " << pc.steps << " steps; final loss " << last << "; checkpoint " << out.string() << '\n';
  return 0;
}

json iteration_json(const IterationLog& e) {
  json rewards = json::array();
  for (std::size_t m = 0; m < e.reward_names.size(); ++m) {
    json trace = json::array();
    for (const auto& t : e.threshold_traces[m]) trace.push_back({t.threshold, t.reward_sum});
    rewards.push_back({{"name", e.reward_names[m]},
                       {"threshold", e.thresholds[m]},
                       {"mean_reward", e.mean_rewards[m]},
                       {"trace", trace}});
  }
  return {{"iteration", e.iteration},   {"rewards", rewards},
          {"mean_R", e.mean_total_reward}, {"mean_ratio", e.mean_ratio},
          {"clip_fraction", e.clip_fraction}, {"objective", e.objective},
          {"wall_time_s", e.wall_time_s}};
}

int run_finetune(const Common& c, const FinetuneOptions& o, const Paths& paths) {
  const Profile p = profile_by_name(c.profile);
  const auto ckpt_path = paths.input(o.ckpt, "checkpoint");
  const auto scenes_path = paths.input(o.scenes, "scene file");
  const auto out = paths.output(o.out, "checkpoint output");
  std::optional<fs::path> log_path;
  if (!o.log.empty()) log_path = paths.output(o.log, "training log");

  FinetuneConfig fc;
  fc.outer_iterations = pick(o.iters, 100);
  fc.inner_epochs = pick(o.epochs, 1);
  fc.batch_size = pick(o.batch, p.batch_size);
  fc.clip_radius = pick(o.clip, 0.2);
  fc.learning_rate = pick(o.lr, 1e-4);
  fc.rewards = o.rewards ? parse_reward_specs(*o.rewards) : p.rewards;
  if (!o.rewards) {
    if (const auto jerk = header_jerk(scenes_path))
      for (auto& spec : fc.rewards)
        if (spec.kind == RewardKind::Discomfort) spec.initial_threshold = *jerk;
  }
  fc.shaping.dynamic_thresholding = !o.no_dt;
  fc.shaping.thresholding.deviation = pick(o.dt_deviation, -1.0);
  fc.shaping.thresholding.rate.base = pick(o.dt_rate, 0.5);
  fc.shaping.thresholding.max_iterations = pick(o.dt_iters, 20);
  fc.seed = pick(c.seed, std::uint64_t{0});
  fc.validate();
  const int every = pick(o.checkpoint_every, 0);

  auto ckpt = load_checkpoint(ckpt_path);
  const auto scenes = load_scenes(scenes_path);
  const auto forecasts = forecast_all(scenes);

  json cfg = {{"command", "finetune"},
              {"profile", p.name},
              {"seed", fc.seed},
              {"checkpoint", ckpt_path.string()},
              {"scenes", scenes_path.string()},
              {"out", out.string()},
              {"iters", fc.outer_iterations},
              {"epochs", fc.inner_epochs},
              {"batch", fc.batch_size},
              {"clip", fc.clip_radius},
              {"lr", fc.learning_rate},
              {"rewards", format_reward_specs(fc.rewards)},
              {"dynamic_thresholding", fc.shaping.dynamic_thresholding},
              {"dt_deviation", fc.shaping.thresholding.deviation},
              {"dt_rate", fc.shaping.thresholding.rate.base},
              {"dt_iters", fc.shaping.thresholding.max_iterations},
              {"pretrain", json::parse(ckpt.training_config.empty() ? "null" : ckpt.training_config)}};
  write_resolved_config(out, cfg);

  std::ofstream log;
  if (log_path) {
    log.open(*log_path, std::ios::binary);
    if (!log) throw IoError("cannot write training log: " + log_path->string());
  }

  auto on_iteration = [&](const IterationLog& e, const PlannerModel& m, const OptimizerState& opt) {
    if (log.is_open()) log << iteration_json(e).dump() << '\n' << std::flush;
    if (every > 0 && (e.iteration + 1) % every == 0) {
      fs::path snap = out;
      snap += ".iter" + std::to_string(e.iteration + 1);
      save_checkpoint(snap, Checkpoint{m, opt, cfg.dump()});
    }
  };
  auto res = finetune(ckpt.model, scenes, forecasts, fc, on_iteration);
  save_checkpoint(out, Checkpoint{res.model, res.optimizer, cfg.dump()});
  const double last_r = res.log.empty() ? 0.0 : res.log.back().mean_total_reward;
  std::cout << "fine-tuned " << fc.outer_iterations << " iterations; last mean R " << last_r << "; checkpoint "
            << out.string() << '\n';
  return 0;
}

std::vector<SampledPlan> sample_all(const PlannerModel& model, const std::vector<Scene>& scenes,
                                    const GuidanceConfig& guidance, std::uint64_t seed) {
  const auto forecasts = forecast_all(scenes);
  const Rng root = Rng(seed).split("eval");
  std::vector<SampledPlan> out;
  out.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    Rng rng = root.split(static_cast<std::uint64_t>(i));
    out.push_back(guided_sample_plan(model, scenes[i], forecasts[i], guidance, rng));
  }
  return out;
}

int run_eval(const Common& c, const EvalOptions& o, const Paths& paths) {
  const Profile p = profile_by_name(c.profile);
  const auto ckpt_path = paths.input(o.ckpt, "checkpoint");
  const auto scenes_path = paths.input(o.scenes, "scene file");
  const auto report_path = paths.output(o.report, "report output");
  fs::path detail_path;
  if (!o.detail.empty()) detail_path = paths.output(o.detail, "report detail output");

  const auto th = resolve_thresholds(p, o.th, header_jerk(scenes_path));
  const auto guidance = resolve_guidance(th, o.th);
  const std::uint64_t seed = pick(c.seed, std::uint64_t{0});

  const auto ckpt = load_checkpoint(ckpt_path);
  const auto scenes = load_scenes(scenes_path);
  const auto sampled = sample_all(ckpt.model, scenes, guidance, seed);
  std::vector<Trajectory> plans;
  for (const auto& s : sampled) plans.push_back(s.plan);
  const auto report = compute_metrics(plans, scenes, th);
  save_report(report_path, detail_path, report);
  write_resolved_config(report_path, {{"command", "eval"},
                                      {"profile", p.name},
                                      {"seed", seed},
                                      {"checkpoint", ckpt_path.string()},
                                      {"scenes", scenes_path.string()},
                                      {"report", report_path.string()},
                                      {"detail", detail_path.string()},
                                      {"thresholds", thresholds_json(th)},
                                      {"guidance_scale", guidance.scale},
                                      {"guidance_dist", guidance.activation_distance}});
  std::cout << "collision_rate " << report.collision_rate << " success_rate " << report.success_rate
            << " discomfort_rate " << report.discomfort_rate << " ade " << report.ade << " fde " << report.fde << '\n';
  return 0;
}

int run_sample(const Common& c, const SampleOptions& o, const Paths& paths) {
  const Profile p = profile_by_name(c.profile);
  const auto ckpt_path = paths.input(o.ckpt, "checkpoint");
  const auto scenes_path = paths.input(o.scenes, "scene file");
  const auto out = paths.output(o.out, "plan output");
  const auto th = resolve_thresholds(p, o.th, header_jerk(scenes_path));
  const auto guidance = resolve_guidance(th, o.th);
  const std::uint64_t seed = pick(c.seed, std::uint64_t{0});

  const auto ckpt = load_checkpoint(ckpt_path);
  const auto scenes = load_scenes(scenes_path);
  const auto sampled = sample_all(ckpt.model, scenes, guidance, seed);
  std::ofstream f(out, std::ios::binary);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    json rec = {{"scene_id", scenes[i].scene_id},
                {"plan", trajectory_points_to_json(sampled[i].plan)},
                {"log_likelihood_sum", sampled[i].log_likelihood_sum()}};
    f << rec.dump() << '\n';
  }
  if (!f) throw IoError("failed writing plans: " + out.string());
  write_resolved_config(out, {{"command", "sample"},
                              {"profile", p.name},
                              {"seed", seed},
                              {"checkpoint", ckpt_path.string()},
                              {"scenes", scenes_path.string()},
                              {"out", out.string()},
                              {"guidance_scale", guidance.scale},
                              {"guidance_dist", guidance.activation_distance}});
  std::cout << "wrote " << scenes.size() << " plans to " << out.string() << '\n';
  return 0;
}

int run_plot(const Common& c, const PlotOptions& o, const Paths& paths) {
  const Profile p = profile_by_name(c.profile);
  const auto scenes_path = paths.input(o.scenes, "scene file");
  const auto out = paths.output(o.out, "plot output");
  const auto scenes = load_scenes(scenes_path);
  if (scenes.empty()) throw std::invalid_argument("scene file has no scenes");

  const Scene* scene = nullptr;
  if (!o.scene_id.empty()) {
    for (const auto& s : scenes)
      if (s.scene_id == o.scene_id) scene = &s;
    if (!scene) throw UsageError("scene id '" + o.scene_id + "' not found in " + scenes_path.string());
  } else {
    const std::size_t idx = pick(o.index, std::size_t{0});
    if (idx >= scenes.size()) throw UsageError("--index out of range");
    scene = &scenes[idx];
  }

  std::vector<Trajectory> plans;
  if (!o.plans.empty()) {
    const auto plans_path = paths.input(o.plans, "plan file");
    std::ifstream in(plans_path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = json::parse(line);
      if (j.at("scene_id").get<std::string>() == scene->scene_id)
        plans.push_back(trajectory_from_json(j.at("plan"), scene->dt()));
    }
  }
  const auto th = resolve_thresholds(p, o.th, header_jerk(scenes_path));
  emit_plot(*scene, plans, out, plot_style(th));
  write_resolved_config(out, {{"command", "plot"},
                              {"profile", p.name},
                              {"scenes", scenes_path.string()},
                              {"scene_id", scene->scene_id},
                              {"plans", o.plans},
                              {"out", out.string()},
                              {"thresholds", thresholds_json(th)}});
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int fail(const char* kind, const std::string& message) {
  std::string one_line = message;
  std::replace(one_line.begin(), one_line.end(), '\n', ' ');
  std::cerr << "error: " << kind << ": " << one_line << '\n';
  return 1;
}

}  // namespace

int run_command(int argc, char** argv) {
  CLI::App app{"Diffusion motion planner with reward fine-tuning", "crowdplan"};
  app.set_config("--config", "", "TOML config file (profile < config < flags)");
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  std::string out_root;
  app.add_option("--profile", common.profile, "Defaults profile: crowdnav or ethucy")->check(CLI::IsMember({"crowdnav", "ethucy"}));
  app.add_option("--seed", common.seed, "Global seed");
  app.add_option("--output-root", out_root, std::string("Root for relative paths (env ") + kOutputRootEnv + ")");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic circle-crossing scenes");
  gen_cmd->add_option("--scenes", gen.count, "Number of scenes");
  gen_cmd->add_option("--out", gen.out, "Output scene file (.jsonl)");
  gen_cmd->add_option("--agents", gen.agents, "Agents per scene including the ego");
  gen_cmd->add_option("--t-obs", gen.t_obs, "Observed steps");
  gen_cmd->add_option("--t-fut", gen.t_fut, "Future steps");
  gen_cmd->add_option("--dt", gen.dt, "Step duration (s)");
  gen_cmd->add_option("--arena-radius", gen.arena_radius, "Start circle radius (m)");
  gen_cmd->add_option("--speed-min", gen.speed_min, "Minimum agent speed (m/s)");
  gen_cmd->add_option("--speed-max", gen.speed_max, "Maximum agent speed (m/s)");
  gen_cmd->add_option("--heading-noise", gen.heading_noise, "Per-step heading noise std (rad)");
  gen_cmd->add_option("--stagger", gen.stagger, "Maximum departure lead before the window opens (steps)");

  PretrainOptions pre;
  auto* pre_cmd = app.add_subcommand("pretrain", "Train the diffusion planner with the DDPM objective");
  pre_cmd->add_option("--scenes", pre.scenes, "Training scene file");
  pre_cmd->add_option("--out", pre.out, "Output checkpoint");
  pre_cmd->add_option("--steps", pre.steps, "Optimizer steps");
  pre_cmd->add_option("--batch", pre.batch, "Batch size");
  pre_cmd->add_option("--lr", pre.lr, "Learning rate");
  pre_cmd->add_option("--loss", pre.loss, "Loss mode: mu or eps");
  pre_cmd->add_option("--diffusion-steps", pre.diffusion_steps, "Number of diffusion steps K");
  pre_cmd->add_option("--beta-start", pre.beta_start, "First beta of the linear schedule");
  pre_cmd->add_option("--beta-end", pre.beta_end, "Last beta of the linear schedule");
  pre_cmd->add_option("--hidden", pre.hidden, "Hidden layer width");
  pre_cmd->add_option("--depth", pre.depth, "Number of hidden layers");
  pre_cmd->add_option("--embed", pre.embed, "Step embedding width");
  pre_cmd->add_option("--loss-log", pre.loss_log, "Optional CSV of per-step losses");

  FinetuneOptions ft;
  auto* ft_cmd = app.add_subcommand("finetune", "Fine-tune with reward policy gradients");
  ft_cmd->add_option("--ckpt", ft.ckpt, "Pretrained checkpoint");
  ft_cmd->add_option("--scenes", ft.scenes, "Scene pool");
  ft_cmd->add_option("--out", ft.out, "Output checkpoint");
  ft_cmd->add_option("--iters", ft.iters, "Outer iterations");
  ft_cmd->add_option("--epochs", ft.epochs, "Inner epochs per snapshot");
  ft_cmd->add_option("--batch", ft.batch, "Rollout batch size B");
  ft_cmd->add_option("--clip", ft.clip, "Importance ratio clip radius (0 disables)");
  ft_cmd->add_option("--lr", ft.lr, "Learning rate");
  ft_cmd->add_option("--rewards", ft.rewards, "name:weight:init_threshold list");
  ft_cmd->add_flag("--no-dt", ft.no_dt, "Disable dynamic thresholding");
  ft_cmd->add_option("--dt-deviation", ft.dt_deviation, "Thresholding deviation delta (default B/10)");
  ft_cmd->add_option("--dt-rate", ft.dt_rate, "Base adaptation rate alpha0");
  ft_cmd->add_option("--dt-iters", ft.dt_iters, "Thresholding iteration budget J");
  ft_cmd->add_option("--log", ft.log, "Training log (.jsonl)");
  ft_cmd->add_option("--checkpoint-every", ft.checkpoint_every, "Write an intermediate checkpoint every N iterations");

  EvalOptions ev;
  auto* ev_cmd = app.add_subcommand("eval", "Evaluate a checkpoint with fixed thresholds");
  ev_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint");
  ev_cmd->add_option("--scenes", ev.scenes, "Evaluation scene file");
  ev_cmd->add_option("--report", ev.report, "Summary CSV");
  ev_cmd->add_option("--detail", ev.detail, "Per-scene CSV");
  add_threshold_flags(ev_cmd, ev.th, true);

  SampleOptions sa;
  auto* sa_cmd = app.add_subcommand("sample", "Sample plans for every scene");
  sa_cmd->add_option("--ckpt", sa.ckpt, "Checkpoint");
  sa_cmd->add_option("--scenes", sa.scenes, "Scene file");
  sa_cmd->add_option("--out", sa.out, "Plan records (.jsonl)");
  add_threshold_flags(sa_cmd, sa.th, true);

  PlotOptions pl;
  auto* pl_cmd = app.add_subcommand("plot", "Render one scene and its plans as SVG");
  pl_cmd->add_option("--scenes", pl.scenes, "Scene file");
  pl_cmd->add_option("--out", pl.out, "Output SVG");
  pl_cmd->add_option("--plans", pl.plans, "Plan records from `sample`");
  pl_cmd->add_option("--scene-id", pl.scene_id, "Scene to draw");
  pl_cmd->add_option("--index", pl.index, "Scene index when no id is given");
  add_threshold_flags(pl_cmd, pl.th, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return 2;
  }

  try {
    Paths paths;
    if (!out_root.empty()) {
      paths.root = out_root;
    } else if (const char* env = std::getenv(kOutputRootEnv); env && *env) {
      paths.root = env;
    }
    if (*gen_cmd) return run_gen(common, gen, paths);
    if (*pre_cmd) return run_pretrain(common, pre, paths);
    if (*ft_cmd) return run_finetune(common, ft, paths);
    if (*ev_cmd) return run_eval(common, ev, paths);
    if (*sa_cmd) return run_sample(common, sa, paths);
    if (*pl_cmd) return run_plot(common, pl, paths);
    fail("usage", "no command given");
    return 2;
  } catch (const UsageError& e) {
    fail("usage", e.what());
    return 2;
  } catch (const IoError& e) {
    fail("io", e.what());
    return 3;
  } catch (const NumericalError& e) {
    return fail("numeric", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
}

int run_command(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("crowdplan");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run_command(static_cast<int>(storage.size()), argv.data());
}

}  // namespace crowdplan::cli
