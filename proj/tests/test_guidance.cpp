#include <gtest/gtest.h>

#include <cmath>

#include "crowdplan/guidance.hpp"
#include "fixtures.hpp"

using namespace crowdplan;

namespace {

double cost_only(const Trajectory& plan, const std::vector<Trajectory>& n, double d) {
  double c = 0.0;
  for (const auto& tr : n)
    for (std::size_t t = 0; t < plan.size(); ++t) {
      const Vec2 diff = plan.points[t] - tr.points[t];
      const double gap = d - std::hypot(diff.x, diff.y);
      if (gap > 0) c += gap * gap;
    }
  return c;
}

}  // namespace

TEST(CollisionCost, Examples) {
  const auto plan = fixtures::line({0, 0}, {0.4, 0}, 8);
  const std::vector<Trajectory> far{fixtures::line({0, 5}, {0.4, 0}, 8)};
  const auto a = collision_cost(plan, far, 0.6);
  EXPECT_EQ(a.cost, 0.0);
  for (double g : a.gradient) EXPECT_EQ(g, 0.0);

  // one neighbor 0.2 m above at every step: gap 0.4 each, pushed in -y
  const std::vector<Trajectory> near{fixtures::line({0, 0.2}, {0.4, 0}, 8)};
  const auto b = collision_cost(plan, near, 0.6);
  EXPECT_NEAR(b.cost, 8 * 0.16, 1e-12);
  for (std::size_t t = 0; t < 8; ++t) {
    EXPECT_NEAR(b.gradient[2 * t], 0.0, 1e-12);
    EXPECT_NEAR(b.gradient[2 * t + 1], 0.8, 1e-12);
  }

  // coincident: cost d_act^2 per step, gradient along +x by convention
  const auto c = collision_cost(plan, std::vector<Trajectory>{plan}, 0.6);
  EXPECT_NEAR(c.cost, 8 * 0.36, 1e-12);
  EXPECT_NEAR(c.gradient[0], -1.2, 1e-12);
  EXPECT_EQ(c.gradient[1], 0.0);

  EXPECT_THROW(collision_cost(plan, std::vector<Trajectory>{fixtures::line({0, 0}, {1, 0}, 3)}, 0.6),
               std::invalid_argument);
}

TEST(CollisionCost, FiniteDifferences) {
  Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory plan{{}, 0.4};
    for (int t = 0; t < 6; ++t) plan.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    std::vector<Trajectory> nb(3, Trajectory{{}, 0.4});
    for (auto& n : nb)
      for (int t = 0; t < 6; ++t) n.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const auto cg = collision_cost(plan, nb, 0.8);
    EXPECT_NEAR(cg.cost, cost_only(plan, nb, 0.8), 1e-12);
    const double h = 1e-7;
    for (std::size_t i = 0; i < cg.gradient.size(); ++i) {
      auto p = plan, m = plan;
      (i % 2 ? p.points[i / 2].y : p.points[i / 2].x) += h;
      (i % 2 ? m.points[i / 2].y : m.points[i / 2].x) -= h;
      const double fd = (cost_only(p, nb, 0.8) - cost_only(m, nb, 0.8)) / (2 * h);
      EXPECT_LT(std::abs(cg.gradient[i] - fd) / std::max(1.0, std::abs(fd)), 1e-5);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 600);
}

TEST(CollisionCost, PermutationInvariant) {
  const auto plan = fixtures::line({0, 0}, {0.3, 0.1}, 5);
  std::vector<Trajectory> nb{fixtures::line({0.2, 0.1}, {0.3, 0}, 5), fixtures::line({1.0, -0.3}, {0, 0.1}, 5),
                             fixtures::line({0.5, 0.5}, {-0.1, -0.1}, 5)};
  const auto a = collision_cost(plan, nb, 0.6);
  std::swap(nb[0], nb[2]);
  const auto b = collision_cost(plan, nb, 0.6);
  EXPECT_NEAR(a.cost, b.cost, 1e-12);
  for (std::size_t i = 0; i < a.gradient.size(); ++i) EXPECT_NEAR(a.gradient[i], b.gradient[i], 1e-12);
}

class GuidedStep : public ::testing::Test {
 protected:
  void SetUp() override {
    scenes = fixtures::small_scenes(20);
    forecasts = forecast_all(scenes);
    model = fixtures::small_planner(scenes);
  }
  std::vector<Scene> scenes;
  std::vector<Forecast> forecasts;
  PlannerModel model;
};

TEST_F(GuidedStep, ZeroScaleIsBitIdentical) {
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    Rng a(i), b(i);
    const auto plain = sample_plan(model, scenes[i], forecasts[i], a);
    const auto guided = guided_sample_plan(model, scenes[i], forecasts[i], GuidanceConfig{0.0, 0.6}, b);
    EXPECT_EQ(plain.plan, guided.plan);
    EXPECT_EQ(plain.plan_z, guided.plan_z);
    EXPECT_EQ(plain.log_likelihood_sum(), guided.log_likelihood_sum());
  }
}

TEST_F(GuidedStep, ShiftMatchesScaledCostGradient) {
  const GuidanceConfig cfg{2.5, 1.5};
  Rng rng(4);
  int active = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto cond = make_conditioning(model, scenes[i], forecasts[i]);
    for (int k = 1; k <= model.schedule.steps; ++k) {
      std::vector<double> z(model.plan_norm.mean.size());
      for (double& v : z) v = rng.normal();
      const auto shift = guidance_shift(model, cond, z, k, cfg);
      // oracle: central differences of the ego-frame cost through the standardizer
      auto cost_z = [&](const std::vector<double>& zz) {
        return cost_only(unflatten(model.plan_norm.invert(zz), cond.local_scene.dt()),
                         cond.local_forecast.neighbor_futures, cfg.activation_distance);
      };
      const double h = 1e-6;
      for (std::size_t j = 0; j < z.size(); ++j) {
        auto p = z, m = z;
        p[j] += h;
        m[j] -= h;
        const double expect = -cfg.scale * model.schedule.reverse_variance[k] * (cost_z(p) - cost_z(m)) / (2 * h);
        EXPECT_NEAR(shift[j], expect, 1e-6 * std::max(1.0, std::abs(expect)));
        if (shift[j] != 0.0) ++active;
      }
      // sampled transition: mean shifted exactly, variance untouched
      Rng r1(k), r2(k);
      const auto g = guided_reverse_step(model, cond, z, k, cfg, r1);
      const auto base = reverse_step(model.params, z, k, cond.context, model.schedule, r2);
      for (std::size_t j = 0; j < z.size(); ++j) {
        EXPECT_NEAR(g.record.mean[j], base.record.mean[j] + shift[j], 1e-12);
        EXPECT_NEAR(g.next[j] - g.record.mean[j], base.next[j] - base.record.mean[j], 1e-12);
      }
    }
  }
  EXPECT_GT(active, 0);
}

TEST_F(GuidedStep, TranslationInvariant) {
  const GuidanceConfig cfg{1.0, 0.6};
  for (std::size_t i = 0; i < 5; ++i) {
    const Vec2 off{13.0, -7.5};
    const auto moved = translate_scene(scenes[i], off);
    Rng a(i), b(i);
    const auto p = guided_sample_plan(model, scenes[i], forecasts[i], cfg, a);
    const auto q = guided_sample_plan(model, moved, forecast_constant_velocity(moved), cfg, b);
    for (std::size_t j = 0; j < p.plan_z.size(); ++j) EXPECT_NEAR(p.plan_z[j], q.plan_z[j], 1e-9);
    for (std::size_t t = 0; t < p.plan.size(); ++t) {
      EXPECT_NEAR(q.plan.points[t].x, p.plan.points[t].x + off.x, 1e-9);
      EXPECT_NEAR(q.plan.points[t].y, p.plan.points[t].y + off.y, 1e-9);
    }
  }
}

TEST(GuidanceConfig, Validation) {
  EXPECT_THROW((GuidanceConfig{-1.0, 0.6}.validate()), std::invalid_argument);
  EXPECT_THROW((GuidanceConfig{1.0, 0.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((GuidanceConfig{0.0, 0.6}.validate()));
}
