#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace crowdplan {

// Counter-based generator (Philox4x32-10). A stream is identified by a 64-bit
// key; child streams are derived by name or index and never share state with
// the parent, so each stochastic operation can take its own explicit stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  [[nodiscard]] Rng split(std::string_view name) const noexcept;
  [[nodiscard]] Rng split(std::uint64_t index) const noexcept;

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept;
  // Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  // Standard normal via Box-Muller.
  double normal() noexcept;

 private:
  Rng(std::uint64_t key, int) noexcept;
  void refill() noexcept;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

}  // namespace crowdplan
