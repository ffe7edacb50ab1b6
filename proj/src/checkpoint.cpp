#include "crowdplan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace crowdplan {
namespace {

class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void reals(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::vector<double> reals() {
    const auto n = u64();
    need(n * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  void expect_magic() {
    need(sizeof(kCheckpointMagic));
    if (std::memcmp(b_.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
      throw std::runtime_error("checkpoint: bad magic (expected ckpt-v1)");
    pos_ += sizeof(kCheckpointMagic);
  }
  void expect_end() const {
    if (pos_ != b_.size()) throw std::runtime_error("checkpoint: trailing bytes");
  }

 private:
  void need(std::uint64_t n) const {
    if (n > b_.size() - pos_) throw std::runtime_error("checkpoint: truncated file");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
  const auto& m = c.model;
  w.u64(m.layout.t_obs);
  w.u64(m.layout.t_fut);
  w.u64(m.layout.num_neighbors);
  w.u64(m.layout.embed_width);

  w.str(to_string(m.params.arch.activation));
  w.u64(m.params.arch.layer_sizes.size());
  for (auto s : m.params.arch.layer_sizes) w.u64(s);
  w.reals(m.params.values);

  w.u64(c.optimizer.step);
  w.f64(c.optimizer.learning_rate);
  w.f64(c.optimizer.beta1);
  w.f64(c.optimizer.beta2);
  w.f64(c.optimizer.epsilon);
  w.reals(c.optimizer.first_moment);
  w.reals(c.optimizer.second_moment);

  w.u64(static_cast<std::uint64_t>(m.schedule.steps));
  w.f64(m.schedule.beta_start);
  w.f64(m.schedule.beta_end);

  w.reals(m.plan_norm.mean);
  w.reals(m.plan_norm.scale);
  w.reals(m.context_norm.mean);
  w.reals(m.context_norm.scale);

  w.str(c.training_config);
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.expect_magic();
  Checkpoint c;
  auto& m = c.model;
  m.layout.t_obs = r.u64();
  m.layout.t_fut = r.u64();
  m.layout.num_neighbors = r.u64();
  m.layout.embed_width = r.u64();

  m.params.arch.activation = activation_from_string(r.str());
  const auto n_layers = r.u64();
  if (n_layers > 64) throw std::runtime_error("checkpoint: implausible layer count");
  for (std::uint64_t i = 0; i < n_layers; ++i) m.params.arch.layer_sizes.push_back(r.u64());
  m.params.arch.validate();
  m.params.values = r.reals();
  if (m.params.values.size() != m.params.arch.parameter_count())
    throw std::runtime_error("checkpoint: parameter array does not match architecture");

  c.optimizer.step = r.u64();
  c.optimizer.learning_rate = r.f64();
  c.optimizer.beta1 = r.f64();
  c.optimizer.beta2 = r.f64();
  c.optimizer.epsilon = r.f64();
  c.optimizer.first_moment = r.reals();
  c.optimizer.second_moment = r.reals();

  const auto steps = static_cast<int>(r.u64());
  const double beta_start = r.f64();
  const double beta_end = r.f64();
  m.schedule = build_schedule(steps, beta_start, beta_end);

  m.plan_norm.mean = r.reals();
  m.plan_norm.scale = r.reals();
  m.context_norm.mean = r.reals();
  m.context_norm.scale = r.reals();
  c.training_config = r.str();
  r.expect_end();

  if (m.params.arch.input_width() != m.layout.width() || m.params.arch.output_width() != m.layout.plan_width())
    throw std::runtime_error("checkpoint: architecture does not match input layout");
  if (m.plan_norm.mean.size() != m.layout.plan_width() || m.context_norm.mean.size() != m.layout.context_width())
    throw std::runtime_error("checkpoint: standardizer widths do not match input layout");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace crowdplan
