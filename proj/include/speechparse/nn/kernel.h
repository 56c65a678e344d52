#pragma once

// Dense float32 parameters, plain forward helpers, Adam, and the
// finite-difference gradient checker.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "speechparse/common.h"

namespace speechparse::nn {

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, float fill = 0.0f);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  float& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  float operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::span<float> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const float> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<float> data_;
};

// A named parameter with its gradient accumulator and Adam moments. All
// three buffers share the parameter's shape.
struct Parameter {
  std::string name;
  Matrix value;
  std::vector<double> grad;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
};

// Raised when a gradient or loss stops being finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ParameterStore {
 public:
  // Returns the index of the new zero-initialised parameter.
  int add(std::string name, int rows, int cols);

  Parameter& at(int index) { return params_.at(static_cast<std::size_t>(index)); }
  const Parameter& at(int index) const { return params_.at(static_cast<std::size_t>(index)); }
  int index_of(std::string_view name) const;  // -1 when absent
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t num_scalars() const;
  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }

  void zero_grad();
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t step) { step_ = step; }

  // Copies values (not gradients or moments) from a store with identical
  // names and shapes.
  void copy_values_from(const ParameterStore& other);
  bool same_values(const ParameterStore& other) const;

 private:
  std::vector<Parameter> params_;
  std::int64_t step_ = 0;
};

// Weights ~ uniform(-limit, limit).
void init_uniform(Parameter& p, Rng& rng, double limit = 0.05);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One Adam update over every parameter, then zeroes gradients. Throws
// NumericError (leaving values untouched) if any gradient is non-finite.
void adam_step(ParameterStore& store, double learning_rate, const AdamConfig& config = {});

// Two-layer perceptron: layer2(tanh(layer1(x) + b1)) + b2. Indices refer to
// a ParameterStore: w1 [hidden x in], b1 [1 x hidden], w2 [out x hidden],
// b2 [1 x out].
struct Mlp2 {
  int w1 = -1;
  int b1 = -1;
  int w2 = -1;
  int b2 = -1;
};

Mlp2 add_mlp2(ParameterStore& store, const std::string& prefix, int in, int hidden, int out);
std::vector<double> mlp2_forward(const ParameterStore& store, const Mlp2& mlp, std::span<const double> x);

// aᵀ W b.
double bilinear(std::span<const double> a, std::span<const double> b, const Matrix& w);

// Max-subtracted softmax; an empty input gives an empty output.
std::vector<double> softmax(std::span<const double> v);

// Loss evaluated at the store's current values. When `with_grad` is set the
// function must also accumulate analytic gradients into the store.
using LossFn = std::function<double(ParameterStore& store, bool with_grad)>;

struct GradCheckOptions {
  double epsilon = 1e-3;
  // Entries sampled per parameter; parameters with fewer entries are
  // checked exhaustively.
  int samples_per_parameter = 200;
  std::uint64_t seed = 0;
  // Restrict to these parameter names; empty checks everything.
  std::vector<std::string> parameters;
  // Entries where both gradients are below this magnitude count as exact.
  double absolute_floor = 1e-7;
};

struct GradCheckEntry {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  GradCheckEntry worst;
  std::vector<GradCheckEntry> entries;
};

// Central differences (f(θ+ε) − f(θ−ε)) / (θ+ − θ−) against the analytic
// gradient; the denominator uses the float32-rounded perturbed values.
// Throws Error if two evaluations at the same point disagree.
GradCheckReport grad_check(const LossFn& loss_fn, ParameterStore& store, const GradCheckOptions& options = {});

// Binary checkpoint: "SPVC", u32 version, then per parameter
// (u32 name length, name, u32 rows, u32 cols, rows*cols little-endian f32).
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::string encode_checkpoint(const ParameterStore& store);
ParameterStore decode_checkpoint(std::string_view bytes, const std::string& source = "<memory>");
void write_checkpoint(const std::string& path, const ParameterStore& store);
ParameterStore read_checkpoint(const std::string& path);

}  // namespace speechparse::nn
