#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crowdplan/diffusion.hpp"

namespace crowdplan {

inline constexpr char kCheckpointMagic[8] = {'c', 'k', 'p', 't', '-', 'v', '1', '\0'};

struct Checkpoint {
  PlannerModel model;
  OptimizerState optimizer;
  // Free-form JSON text describing how the checkpoint was produced.
  std::string training_config;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Binary layout: the 8-byte magic "ckpt-v1\0", then layout, architecture,
// parameters, optimizer state, schedule record, standardizers and the
// training configuration. Integers are u64 and reals IEEE-754 binary64, all
// little-endian; arrays and strings carry a u64 length prefix.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace crowdplan
