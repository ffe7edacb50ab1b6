#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crowdplan {

enum class Activation { Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Layer widths from input to output, e.g. {130, 128, 128, 16}.
struct Architecture {
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::Tanh;

  [[nodiscard]] std::size_t input_width() const { return layer_sizes.front(); }
  [[nodiscard]] std::size_t output_width() const { return layer_sizes.back(); }
  [[nodiscard]] std::size_t num_layers() const noexcept {
    return layer_sizes.empty() ? 0 : layer_sizes.size() - 1;
  }
  [[nodiscard]] std::size_t parameter_count() const;
  // Offset of layer l's weight block (row-major, out x in) in the flat array;
  // the bias block follows immediately.
  [[nodiscard]] std::size_t weight_offset(std::size_t layer) const;
  [[nodiscard]] std::size_t bias_offset(std::size_t layer) const;

  void validate() const;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// Flat parameter storage. Gradients use the same type and layout.
struct DenoiserParams {
  Architecture arch;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] std::span<const double> weights(std::size_t layer) const;
  [[nodiscard]] std::span<const double> biases(std::size_t layer) const;
  [[nodiscard]] bool finite() const;
  [[nodiscard]] double mean_abs() const;

  static DenoiserParams zeros(const Architecture& arch);
  friend bool operator==(const DenoiserParams&, const DenoiserParams&) = default;
};

// Layout of the conditioning vector fed to the network:
// [noisy plan (2*T_fut) | step embedding | ego history (2*T_obs) |
//  forecast (2*T_fut*(N-1)) | goal (2)].
struct InputLayout {
  std::size_t t_obs = 8;
  std::size_t t_fut = 8;
  std::size_t num_neighbors = 5;
  std::size_t embed_width = 16;

  [[nodiscard]] std::size_t plan_width() const noexcept { return 2 * t_fut; }
  [[nodiscard]] std::size_t context_width() const noexcept { return 2 * t_obs + 2 * t_fut * num_neighbors + 2; }
  [[nodiscard]] std::size_t width() const noexcept { return plan_width() + embed_width + context_width(); }

  friend bool operator==(const InputLayout&, const InputLayout&) = default;
};

Architecture default_architecture(const InputLayout& layout, std::size_t hidden = 128, std::size_t depth = 2);

// Sinusoidal encoding of the diffusion step index.
std::vector<double> step_embedding(int k, std::size_t width);

// Assembles a full network input from its parts.
std::vector<double> assemble_input(std::span<const double> noisy_plan, int k, std::size_t embed_width,
                                   std::span<const double> context);

// Fan-in scaled uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
DenoiserParams init_params(const Architecture& arch, std::uint64_t seed);
// Same, but rejects an architecture whose input width disagrees with the layout.
DenoiserParams init_params(const Architecture& arch, const InputLayout& layout, std::uint64_t seed);

struct ForwardCache {
  // activations[0] is the input; activations[l] the output of layer l.
  std::vector<std::vector<double>> activations;
  std::size_t param_count = 0;
};

struct ForwardResult {
  std::vector<double> output;
  ForwardCache cache;
};

ForwardResult forward(const DenoiserParams& params, std::span<const double> input);
// Output only; skips building the cache.
std::vector<double> predict(const DenoiserParams& params, std::span<const double> input);
// Row-major batch: rows.size() == n * input_width. Returns n * output_width.
std::vector<double> predict_batch(const DenoiserParams& params, std::span<const double> rows, std::size_t n);

// Reverse-mode gradient of dot(output, grad_output) w.r.t. every parameter.
DenoiserParams backward(const DenoiserParams& params, const ForwardCache& cache,
                        std::span<const double> grad_output);
// Accumulating variant: adds into `grads` (which must match params' layout).
void backward_into(const DenoiserParams& params, const ForwardCache& cache, std::span<const double> grad_output,
                   std::span<double> grads);

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerState for_params(const DenoiserParams& params, double learning_rate);
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

struct AdamResult {
  DenoiserParams params;
  OptimizerState state;
};

// One bias-corrected Adam update. Throws on non-finite gradients.
AdamResult adam_step(const DenoiserParams& params, std::span<const double> grads, const OptimizerState& state);

}  // namespace crowdplan
