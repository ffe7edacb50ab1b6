#include "crowdplan/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "crowdplan/errors.hpp"
#include "crowdplan/rng.hpp"

namespace crowdplan {
namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// out[i] = b[i] + sum_j W[i][j] * in[j]; summation order is fixed so that
// single-row and batched evaluation agree bit for bit.
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> in,
            std::span<double> out) {
  const std::size_t n_in = in.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double* row = w.data() + i * n_in;
    double acc = b[i];
    for (std::size_t j = 0; j < n_in; ++j) acc += row[j] * in[j];
    out[i] = acc;
  }
}

void activate(Activation a, std::span<double> v) {
  switch (a) {
    case Activation::Tanh:
      for (double& x : v) x = std::tanh(x);
      break;
  }
}

void check_input(const DenoiserParams& params, std::span<const double> input) {
  if (params.arch.layer_sizes.empty()) throw std::invalid_argument("denoiser: empty architecture");
  if (input.size() != params.arch.input_width())
    throw std::invalid_argument("denoiser: input width " + std::to_string(input.size()) + " does not match architecture input " +
                                std::to_string(params.arch.input_width()));
  if (!all_finite(input)) throw NumericalError("denoiser: non-finite input");
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh:
      return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::size_t Architecture::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) n += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  return n;
}

std::size_t Architecture::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  return off;
}

std::size_t Architecture::bias_offset(std::size_t layer) const {
  return weight_offset(layer) + layer_sizes[layer] * layer_sizes[layer + 1];
}

void Architecture::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("architecture needs at least input and output layers");
  for (std::size_t s : layer_sizes)
    if (s == 0) throw std::invalid_argument("architecture layer sizes must be positive");
}

std::span<const double> DenoiserParams::weights(std::size_t layer) const {
  return std::span<const double>(values).subspan(arch.weight_offset(layer),
                                                 arch.layer_sizes[layer] * arch.layer_sizes[layer + 1]);
}

std::span<const double> DenoiserParams::biases(std::size_t layer) const {
  return std::span<const double>(values).subspan(arch.bias_offset(layer), arch.layer_sizes[layer + 1]);
}

bool DenoiserParams::finite() const { return all_finite(values); }

double DenoiserParams::mean_abs() const {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += std::abs(v);
  return s / static_cast<double>(values.size());
}

DenoiserParams DenoiserParams::zeros(const Architecture& arch) {
  arch.validate();
  return DenoiserParams{arch, std::vector<double>(arch.parameter_count(), 0.0)};
}

Architecture default_architecture(const InputLayout& layout, std::size_t hidden, std::size_t depth) {
  Architecture arch;
  arch.layer_sizes.push_back(layout.width());
  for (std::size_t d = 0; d < depth; ++d) arch.layer_sizes.push_back(hidden);
  arch.layer_sizes.push_back(layout.plan_width());
  return arch;
}

std::vector<double> step_embedding(int k, std::size_t width) {
  std::vector<double> emb(width, 0.0);
  const std::size_t half = width / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(half, 1)));
    emb[2 * i] = std::sin(k * freq);
    emb[2 * i + 1] = std::cos(k * freq);
  }
  return emb;
}

std::vector<double> assemble_input(std::span<const double> noisy_plan, int k, std::size_t embed_width,
                                   std::span<const double> context) {
  std::vector<double> x;
  x.reserve(noisy_plan.size() + embed_width + context.size());
  x.insert(x.end(), noisy_plan.begin(), noisy_plan.end());
  const auto emb = step_embedding(k, embed_width);
  x.insert(x.end(), emb.begin(), emb.end());
  x.insert(x.end(), context.begin(), context.end());
  return x;
}

DenoiserParams init_params(const Architecture& arch, std::uint64_t seed) {
  DenoiserParams p = DenoiserParams::zeros(arch);
  Rng rng = Rng(seed).split("denoiser-init");
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch.layer_sizes[l]));
    const std::size_t off = arch.weight_offset(l);
    const std::size_t n = arch.layer_sizes[l] * arch.layer_sizes[l + 1];
    for (std::size_t i = 0; i < n; ++i) p.values[off + i] = rng.uniform(-bound, bound);
  }
  return p;
}

DenoiserParams init_params(const Architecture& arch, const InputLayout& layout, std::uint64_t seed) {
  arch.validate();
  if (arch.input_width() != layout.width())
    throw std::invalid_argument("init_params: architecture input width " + std::to_string(arch.input_width()) +
                                " does not match configured input width " + std::to_string(layout.width()));
  if (arch.output_width() != layout.plan_width())
    throw std::invalid_argument("init_params: architecture output width must equal 2*T_fut");
  return init_params(arch, seed);
}

ForwardResult forward(const DenoiserParams& params, std::span<const double> input) {
  check_input(params, input);
  const auto& arch = params.arch;
  ForwardResult r;
  r.cache.param_count = params.size();
  r.cache.activations.reserve(arch.layer_sizes.size());
  r.cache.activations.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    std::vector<double> out(arch.layer_sizes[l + 1]);
    affine(params.weights(l), params.biases(l), r.cache.activations.back(), out);
    if (l + 1 < arch.num_layers()) activate(arch.activation, out);
    r.cache.activations.push_back(std::move(out));
  }
  r.output = r.cache.activations.back();
  if (!all_finite(r.output)) throw NumericalError("denoiser: non-finite output");
  return r;
}

std::vector<double> predict(const DenoiserParams& params, std::span<const double> input) {
  check_input(params, input);
  const auto& arch = params.arch;
  std::vector<double> cur(input.begin(), input.end());
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    std::vector<double> out(arch.layer_sizes[l + 1]);
    affine(params.weights(l), params.biases(l), cur, out);
    if (l + 1 < arch.num_layers()) activate(arch.activation, out);
    cur = std::move(out);
  }
  if (!all_finite(cur)) throw NumericalError("denoiser: non-finite output");
  return cur;
}

std::vector<double> predict_batch(const DenoiserParams& params, std::span<const double> rows, std::size_t n) {
  const auto& arch = params.arch;
  if (rows.size() != n * arch.input_width()) throw std::invalid_argument("predict_batch: rows size mismatch");
  if (!all_finite(rows)) throw NumericalError("denoiser: non-finite input");
  std::vector<double> cur(rows.begin(), rows.end());
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const std::size_t in_w = arch.layer_sizes[l];
    const std::size_t out_w = arch.layer_sizes[l + 1];
    std::vector<double> out(n * out_w);
    for (std::size_t r = 0; r < n; ++r) {
      const std::span<double> dst(out.data() + r * out_w, out_w);
      affine(params.weights(l), params.biases(l), std::span<const double>(cur.data() + r * in_w, in_w), dst);
      if (l + 1 < arch.num_layers()) activate(arch.activation, dst);
    }
    cur = std::move(out);
  }
  if (!all_finite(cur)) throw NumericalError("denoiser: non-finite output");
  return cur;
}

void backward_into(const DenoiserParams& params, const ForwardCache& cache, std::span<const double> grad_output,
                   std::span<double> grads) {
  const auto& arch = params.arch;
  if (cache.param_count != params.size() || cache.activations.size() != arch.layer_sizes.size())
    throw std::invalid_argument("backward: cache was not produced by these parameters");
  if (grads.size() != params.size()) throw std::invalid_argument("backward: gradient buffer size mismatch");
  if (grad_output.size() != arch.output_width()) throw std::invalid_argument("backward: grad_output width mismatch");

  std::vector<double> delta(grad_output.begin(), grad_output.end());
  for (std::size_t l = arch.num_layers(); l-- > 0;) {
    const std::size_t in_w = arch.layer_sizes[l];
    const std::size_t out_w = arch.layer_sizes[l + 1];
    const auto& a_in = cache.activations[l];
    double* gw = grads.data() + arch.weight_offset(l);
    double* gb = grads.data() + arch.bias_offset(l);
    for (std::size_t i = 0; i < out_w; ++i) {
      const double d = delta[i];
      gb[i] += d;
      if (d == 0.0) continue;
      double* row = gw + i * in_w;
      for (std::size_t j = 0; j < in_w; ++j) row[j] += d * a_in[j];
    }
    if (l == 0) break;
    const auto w = params.weights(l);
    std::vector<double> prev(in_w, 0.0);
    for (std::size_t i = 0; i < out_w; ++i) {
      const double d = delta[i];
      if (d == 0.0) continue;
      const double* row = w.data() + i * in_w;
      for (std::size_t j = 0; j < in_w; ++j) prev[j] += row[j] * d;
    }
    switch (arch.activation) {
      case Activation::Tanh:
        for (std::size_t j = 0; j < in_w; ++j) prev[j] *= 1.0 - a_in[j] * a_in[j];
        break;
    }
    delta = std::move(prev);
  }
}

DenoiserParams backward(const DenoiserParams& params, const ForwardCache& cache, std::span<const double> grad_output) {
  DenoiserParams g{params.arch, std::vector<double>(params.size(), 0.0)};
  backward_into(params, cache, grad_output, g.values);
  return g;
}

OptimizerState OptimizerState::for_params(const DenoiserParams& params, double learning_rate) {
  OptimizerState s;
  s.first_moment.assign(params.size(), 0.0);
  s.second_moment.assign(params.size(), 0.0);
  s.learning_rate = learning_rate;
  return s;
}

AdamResult adam_step(const DenoiserParams& params, std::span<const double> grads, const OptimizerState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch between params, grads and optimizer state");
  if (!all_finite(grads)) throw NumericalError("adam_step: non-finite gradient (training diverged)");

  AdamResult r{params, state};
  r.state.step = state.step + 1;
  const double t = static_cast<double>(r.state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double g = grads[i];
    double& m = r.state.first_moment[i];
    double& v = r.state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    r.params.values[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
  return r;
}

}  // namespace crowdplan
