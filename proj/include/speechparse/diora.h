#pragma once

// Inside-outside recursive autoencoder over token sequences or continuous
// segment embeddings, trained by reconstructing each leaf from its outside
// vector and parsed by CKY over the learned span scores.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "speechparse/chart.h"
#include "speechparse/nn/kernel.h"
#include "speechparse/nn/tape.h"
#include "speechparse/segments.h"
#include "speechparse/treebank.h"

namespace speechparse {

enum class InputMode { kToken, kContinuous };

// Which per-span quantity fills the parse chart.
enum class ChartScore {
  // Softmax-aggregated compatibility e(i, j).
  kAggregate,
  // Best single split's raw compatibility max_k ê_k(i, j).
  kMaxSplit,
};

std::string to_string(InputMode mode);
InputMode parse_input_mode(std::string_view text);
std::string to_string(ChartScore score);
ChartScore parse_chart_score(std::string_view text);

struct ModelConfig {
  InputMode mode = InputMode::kToken;
  int hidden_dim = 32;
  // Token mode.
  int vocab_size = 0;
  // Continuous mode.
  int feature_dim = 0;
  int segment_hidden = 128;
  ChartScore chart_score = ChartScore::kAggregate;
};

// Owns every learnable parameter. Parameter names:
//   token mode       embed [V x d]
//   continuous mode  leaf.w [d x D], leaf.b, segment.{w1,b1,w2,b2}
//   both             inside.w [d x 2d], inside.b, outside.w [d x 2d],
//                    outside.b, score [d x d], root [1 x d]
class DioraModel {
 public:
  // Weights uniform(-0.05, 0.05), biases zero.
  static DioraModel create(const ModelConfig& config, std::uint64_t seed);
  // Wraps loaded parameters, checking names and shapes against `config`.
  static DioraModel from_parameters(const ModelConfig& config, nn::ParameterStore store);

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }
  int dim() const { return config_.hidden_dim; }

  int embed = -1;
  int leaf_w = -1;
  int leaf_b = -1;
  nn::Mlp2 segment_mlp;
  int inside_w = -1;
  int inside_b = -1;
  int outside_w = -1;
  int outside_b = -1;
  int score = -1;
  int root = -1;

 private:
  DioraModel(ModelConfig config, nn::ParameterStore store);
  void bind();

  ModelConfig config_;
  nn::ParameterStore store_;
};

// One utterance as the model sees it: token ids (token mode) or frames plus
// per-leaf frame ranges (continuous mode). `frames` must outlive any tape
// built from it.
struct ModelInput {
  std::vector<int> token_ids;
  const FrameMatrix* frames = nullptr;
  std::vector<FrameRange> ranges;

  int length() const;
};

// Per-span tape nodes for both passes. Spans are addressed 1-based.
struct InsideOutsideChart {
  int n = 0;
  std::vector<nn::Tape::Id> inside_vec;
  std::vector<nn::Tape::Id> inside_score;
  // Softmax node over splits k = i..j-1 (absent for width-1 spans).
  std::vector<nn::Tape::Id> inside_weights;
  std::vector<double> max_split_score;
  std::vector<nn::Tape::Id> outside_vec;
  std::vector<nn::Tape::Id> outside_score;
  // Softmax node over parent decompositions (absent for the root).
  std::vector<nn::Tape::Id> outside_weights;
  bool has_outside = false;

  explicit InsideOutsideChart(int length);
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j - 1);
  }
};

// Leaf vectors: embedding rows (unknown ids map to <unk> = 1) or the leaf
// transform tanh(W·pool + b) of pooled segment embeddings.
std::vector<nn::Tape::Id> leaf_vectors(nn::Tape& tape, const DioraModel& model, const ModelInput& input);

InsideOutsideChart inside_pass(nn::Tape& tape, const DioraModel& model, const std::vector<nn::Tape::Id>& leaves);
void outside_pass(nn::Tape& tape, const DioraModel& model, InsideOutsideChart& chart);

// (1/n) Σ_i Σ_neg max(0, margin − b̄(i,i)·x_i + b̄(i,i)·x_neg).
// `negatives[i]` lists the negative leaf nodes for position i.
inline constexpr double kDefaultMargin = 1.0;
nn::Tape::Id reconstruction_loss(nn::Tape& tape, const InsideOutsideChart& chart,
                                 const std::vector<nn::Tape::Id>& leaves,
                                 const std::vector<std::vector<nn::Tape::Id>>& negatives,
                                 double margin = kDefaultMargin);

// Chart of per-span scores (width-1 cells 0) under the model's ChartScore.
SpanChart span_scores(const DioraModel& model, const ModelInput& input);
Tree parse(const DioraModel& model, const ModelInput& input);

// Mean reconstruction loss of a batch. Negatives come from other positions
// in the batch (continuous mode) or from vocabulary rows other than the
// gold token (token mode). Utterances shorter than 2 are ignored.
nn::Tape::Id batch_loss(nn::Tape& tape, const DioraModel& model, const std::vector<const ModelInput*>& batch,
                        int negative_samples, Rng& rng, double margin = kDefaultMargin);

}  // namespace speechparse
