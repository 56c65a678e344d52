#pragma once

// Reverse-mode differentiation over small dense vectors. Each op records a
// backward closure; backward() replays them in reverse creation order and
// accumulates parameter gradients into the bound ParameterStore.
//
// Values live in one arena and are computed in double precision from the
// float32 parameters.

#include <functional>
#include <span>
#include <vector>

#include "speechparse/nn/kernel.h"

namespace speechparse::nn {

class Tape {
 public:
  using Id = int;

  explicit Tape(ParameterStore& store) : store_(&store), grad_store_(&store) {}
  // Forward-only tape; backward() throws.
  explicit Tape(const ParameterStore& store) : store_(&store) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf holding constant values (still receives a gradient, which is
  // discarded).
  Id input(std::span<const double> values);
  Id input(std::span<const float> values);
  // Row `row` of a parameter matrix; gradient scatters back into that row.
  Id parameter_row(int param, int row);

  // tanh(W · [left; right] + b), W [d x (|left| + |right|)], b [1 x d].
  Id compose(int w, int b, Id left, Id right);
  // tanh(W · x + b).
  Id affine_tanh(int w, int b, Id x);
  // Scalar aᵀ S b.
  Id bilinear(Id a, Id b, int s);
  // Scalar a · b.
  Id dot(Id a, Id b);
  // Element-wise sum of equal-length nodes.
  Id sum(std::span<const Id> terms);
  Id sum(std::initializer_list<Id> terms) { return sum(std::span<const Id>(terms.begin(), terms.size())); }
  Id scale(Id x, double factor);
  // Concatenates scalar nodes into one vector.
  Id stack(std::span<const Id> scalars);
  Id softmax(Id x);
  // Σ_k weights[k] · vectors[k].
  Id weighted_sum(Id weights, std::span<const Id> vectors);
  // x / max(‖x‖, 1e-12).
  Id normalize(Id x);
  // Σ_neg max(0, margin − anchor·positive + anchor·neg).
  Id margin_loss(Id anchor, Id positive, std::span<const Id> negatives, double margin);

  // Softmax-weighted average of frame rows [first, last] of a row-major
  // frame buffer with `dim` columns; weights come from a scalar-output
  // Mlp2 applied to each frame. Frames themselves receive no gradient.
  Id attentive_pool(std::span<const float> frames, int dim, int first, int last, const Mlp2& mlp);

  std::span<const double> value(Id id) const;
  double scalar(Id id) const { return value(id)[0]; }
  std::size_t size(Id id) const { return nodes_.at(static_cast<std::size_t>(id)).size; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 and accumulates gradients into the store.
  // `root` must be a scalar.
  void backward(Id root);

 private:
  struct Node {
    std::size_t offset = 0;
    std::size_t size = 0;
    std::function<void(Tape&)> back;
  };

  Id push(std::size_t size);
  double* val(Id id) { return values_.data() + nodes_[static_cast<std::size_t>(id)].offset; }
  double* grad(Id id) { return grads_.data() + nodes_[static_cast<std::size_t>(id)].offset; }
  const Matrix& param(int index) const { return store_->at(index).value; }
  double* param_grad(int index) { return grad_store_->at(index).grad.data(); }
  void require_size(Id id, std::size_t size, const char* op) const;

  const ParameterStore* store_;
  ParameterStore* grad_store_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> grads_;
};

}  // namespace speechparse::nn
