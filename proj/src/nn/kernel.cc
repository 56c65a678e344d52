#include "speechparse/nn/kernel.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "speechparse/fileio.h"

namespace speechparse::nn {

Matrix::Matrix(int rows, int cols, float fill) : rows_(rows), cols_(cols) {
  if (rows <= 0 || cols <= 0) throw Error("Matrix: dimensions must be positive");
  data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
}

int ParameterStore::add(std::string name, int rows, int cols) {
  if (index_of(name) >= 0) throw Error("duplicate parameter " + name);
  Parameter p;
  p.name = std::move(name);
  p.value = Matrix(rows, cols);
  p.grad.assign(p.value.size(), 0.0);
  p.first_moment.assign(p.value.size(), 0.0);
  p.second_moment.assign(p.value.size(), 0.0);
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

int ParameterStore::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

Parameter& ParameterStore::get(std::string_view name) {
  const int i = index_of(name);
  if (i < 0) throw Error("unknown parameter " + std::string(name));
  return params_[static_cast<std::size_t>(i)];
}

const Parameter& ParameterStore::get(std::string_view name) const {
  const int i = index_of(name);
  if (i < 0) throw Error("unknown parameter " + std::string(name));
  return params_[static_cast<std::size_t>(i)];
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.params_.size() != params_.size()) throw Error("copy_values_from: parameter count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& src = other.params_[i];
    auto& dst = params_[i];
    if (src.name != dst.name || src.value.rows() != dst.value.rows() || src.value.cols() != dst.value.cols()) {
      throw Error("copy_values_from: parameter " + dst.name + " does not match " + src.name);
    }
    dst.value = src.value;
  }
}

bool ParameterStore::same_values(const ParameterStore& other) const {
  if (other.params_.size() != params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name || !(params_[i].value == other.params_[i].value)) return false;
  }
  return true;
}

void init_uniform(Parameter& p, Rng& rng, double limit) {
  for (float& x : p.value.data()) x = static_cast<float>(rng.uniform(-limit, limit));
}

void adam_step(ParameterStore& store, double learning_rate, const AdamConfig& config) {
  for (const auto& p : store.params()) {
    for (double g : p.grad) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter " + p.name);
    }
  }
  const std::int64_t t = store.step() + 1;
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (auto& p : store.params()) {
    auto values = p.value.data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double g = p.grad[k];
      double& m = p.first_moment[k];
      double& v = p.second_moment[k];
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g * g;
      const double m_hat = m / correction1;
      const double v_hat = v / correction2;
      values[k] = static_cast<float>(values[k] - learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon));
    }
  }
  store.set_step(t);
  store.zero_grad();
}

Mlp2 add_mlp2(ParameterStore& store, const std::string& prefix, int in, int hidden, int out) {
  Mlp2 mlp;
  mlp.w1 = store.add(prefix + ".w1", hidden, in);
  mlp.b1 = store.add(prefix + ".b1", 1, hidden);
  mlp.w2 = store.add(prefix + ".w2", out, hidden);
  mlp.b2 = store.add(prefix + ".b2", 1, out);
  return mlp;
}

std::vector<double> mlp2_forward(const ParameterStore& store, const Mlp2& mlp, std::span<const double> x) {
  const Matrix& w1 = store.at(mlp.w1).value;
  const Matrix& b1 = store.at(mlp.b1).value;
  const Matrix& w2 = store.at(mlp.w2).value;
  const Matrix& b2 = store.at(mlp.b2).value;
  if (static_cast<int>(x.size()) != w1.cols() || b1.cols() != w1.rows() || w2.cols() != w1.rows() ||
      b2.cols() != w2.rows()) {
    throw Error("mlp2_forward: shape mismatch");
  }
  std::vector<double> hidden(static_cast<std::size_t>(w1.rows()));
  for (int h = 0; h < w1.rows(); ++h) {
    double z = b1(0, h);
    const auto row = w1.row(h);
    for (std::size_t k = 0; k < x.size(); ++k) z += row[k] * x[k];
    hidden[static_cast<std::size_t>(h)] = std::tanh(z);
  }
  std::vector<double> out(static_cast<std::size_t>(w2.rows()));
  for (int o = 0; o < w2.rows(); ++o) {
    double z = b2(0, o);
    const auto row = w2.row(o);
    for (std::size_t k = 0; k < hidden.size(); ++k) z += row[k] * hidden[k];
    out[static_cast<std::size_t>(o)] = z;
  }
  return out;
}

double bilinear(std::span<const double> a, std::span<const double> b, const Matrix& w) {
  if (static_cast<int>(a.size()) != w.rows() || static_cast<int>(b.size()) != w.cols()) {
    throw Error("bilinear: shape mismatch");
  }
  double total = 0.0;
  for (int r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    double inner = 0.0;
    for (std::size_t c = 0; c < b.size(); ++c) inner += row[c] * b[c];
    total += a[static_cast<std::size_t>(r)] * inner;
  }
  return total;
}

std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  if (out.empty()) return out;
  const double top = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& x : out) {
    x = std::exp(x - top);
    total += x;
  }
  for (double& x : out) x /= total;
  return out;
}

namespace {

std::vector<std::size_t> sample_indices(std::size_t size, int samples, Rng& rng) {
  std::vector<std::size_t> all(size);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (samples < 0 || size <= static_cast<std::size_t>(samples)) return all;
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < static_cast<std::size_t>(samples); ++i) {
    std::swap(all[i], all[i + rng.below(size - i)]);
  }
  all.resize(static_cast<std::size_t>(samples));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

GradCheckReport grad_check(const LossFn& loss_fn, ParameterStore& store, const GradCheckOptions& options) {
  store.zero_grad();
  const double base = loss_fn(store, true);
  const double again = loss_fn(store, false);
  if (base != again) throw Error("grad_check: loss function is not deterministic");

  std::vector<std::vector<double>> analytic;
  analytic.reserve(store.size());
  for (const auto& p : store.params()) analytic.push_back(p.grad);
  store.zero_grad();

  Rng rng(options.seed);
  GradCheckReport report;
  for (std::size_t pi = 0; pi < store.size(); ++pi) {
    Parameter& p = store.params()[pi];
    if (!options.parameters.empty() &&
        std::find(options.parameters.begin(), options.parameters.end(), p.name) == options.parameters.end()) {
      continue;
    }
    auto values = p.value.data();
    for (std::size_t k : sample_indices(values.size(), options.samples_per_parameter, rng)) {
      const float original = values[k];
      const float plus = static_cast<float>(original + options.epsilon);
      const float minus = static_cast<float>(original - options.epsilon);
      values[k] = plus;
      const double f_plus = loss_fn(store, false);
      values[k] = minus;
      const double f_minus = loss_fn(store, false);
      values[k] = original;

      GradCheckEntry entry;
      entry.parameter = p.name;
      entry.index = k;
      entry.analytic = analytic[pi][k];
      entry.numeric = (f_plus - f_minus) / (static_cast<double>(plus) - static_cast<double>(minus));
      const double scale = std::max(std::abs(entry.analytic), std::abs(entry.numeric));
      const double diff = std::abs(entry.analytic - entry.numeric);
      entry.relative_error = scale < options.absolute_floor ? 0.0 : diff / scale;
      if (entry.relative_error >= report.max_relative_error) {
        report.max_relative_error = entry.relative_error;
        report.worst = entry;
      }
      report.entries.push_back(std::move(entry));
      ++report.checked;
    }
  }
  return report;
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& source) : bytes_(bytes), source_(source) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
  }
  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError(source_, 0, "truncated checkpoint");
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::string_view bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ParameterStore& store) {
  std::string out = "SPVC";
  put_u32(out, kCheckpointVersion);
  for (const auto& p : store.params()) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put_u32(out, static_cast<std::uint32_t>(p.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.value.cols()));
    const auto data = p.value.data();
    out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(float));
  }
  return out;
}

ParameterStore decode_checkpoint(std::string_view bytes, const std::string& source) {
  Reader in(bytes, source);
  if (in.take(4) != "SPVC") throw FormatError(source, 0, "bad checkpoint magic");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(source, 0, "unsupported checkpoint version " + std::to_string(version));
  }
  ParameterStore store;
  while (!in.done()) {
    const std::uint32_t name_len = in.u32();
    std::string name(in.take(name_len));
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (rows == 0 || cols == 0) throw FormatError(source, 0, "empty parameter " + name);
    if (store.index_of(name) >= 0) throw FormatError(source, 0, "duplicate parameter " + name);
    if (static_cast<std::uint64_t>(rows) * cols * sizeof(float) > in.remaining()) {
      throw FormatError(source, 0, "truncated checkpoint");
    }
    const int idx = store.add(name, static_cast<int>(rows), static_cast<int>(cols));
    auto data = store.at(idx).value.data();
    const std::string_view raw = in.take(data.size() * sizeof(float));
    std::memcpy(data.data(), raw.data(), raw.size());
    for (float v : data) {
      if (!std::isfinite(v)) throw FormatError(source, 0, "non-finite value in parameter " + name);
    }
  }
  return store;
}

void write_checkpoint(const std::string& path, const ParameterStore& store) {
  fileio::write_file_atomic(path, encode_checkpoint(store));
}

ParameterStore read_checkpoint(const std::string& path) { return decode_checkpoint(fileio::read_file(path), path); }

}  // namespace speechparse::nn
