#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crowdplan/ddpo.hpp"
#include "crowdplan/metrics.hpp"
#include "crowdplan/rewards.hpp"
#include "crowdplan/scene.hpp"

namespace crowdplan::cli {

// Built-in defaults; a config file and then command-line flags override them.
struct Profile {
  std::string name;
  SceneConfig scenes;
  EvalThresholds thresholds;
  std::size_t batch_size = 128;
  std::vector<RewardSpec> rewards;
};

Profile crowdnav_profile();
Profile ethucy_profile();
Profile profile_by_name(const std::string& name);

// Environment variable that overrides the output root directory.
inline constexpr const char* kOutputRootEnv = "CROWDPLAN_OUTPUT_ROOT";

// Subcommands: gen, pretrain, finetune, eval, sample, plot. Returns 0 on
// success; on failure prints one line "error: <kind>: <message>" to stderr.
int run_command(int argc, char** argv);
int run_command(const std::vector<std::string>& args);

// 70th percentile of the ground-truth ego max-jerk over a scene set.
double jerk_percentile(const std::vector<Scene>& scenes, double quantile);

}  // namespace crowdplan::cli
