#include "speechparse/diora.h"

#include <algorithm>

namespace speechparse {

using nn::Tape;

std::string to_string(InputMode mode) { return mode == InputMode::kToken ? "token" : "direct"; }

InputMode parse_input_mode(std::string_view text) {
  if (text == "token") return InputMode::kToken;
  if (text == "direct" || text == "continuous") return InputMode::kContinuous;
  throw Error("unknown mode '" + std::string(text) + "' (expected token|direct)");
}

std::string to_string(ChartScore score) { return score == ChartScore::kAggregate ? "aggregate" : "max-split"; }

ChartScore parse_chart_score(std::string_view text) {
  if (text == "aggregate") return ChartScore::kAggregate;
  if (text == "max-split") return ChartScore::kMaxSplit;
  throw Error("unknown chart score '" + std::string(text) + "' (expected aggregate|max-split)");
}

namespace {

constexpr int kUnkId = 1;

void check_shape(const nn::ParameterStore& store, int index, const char* name, int rows, int cols) {
  if (index < 0) throw Error(std::string("model is missing parameter ") + name);
  const auto& m = store.at(index).value;
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(std::string("parameter ") + name + " has shape " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

DioraModel::DioraModel(ModelConfig config, nn::ParameterStore store)
    : config_(std::move(config)), store_(std::move(store)) {}

void DioraModel::bind() {
  const int d = config_.hidden_dim;
  if (d < 1) throw Error("hidden_dim must be positive");
  auto& s = store_;
  if (config_.mode == InputMode::kToken) {
    if (config_.vocab_size < 3) throw Error("token mode needs a vocabulary of at least 3 entries");
    embed = s.index_of("embed");
    check_shape(s, embed, "embed", config_.vocab_size, d);
  } else {
    if (config_.feature_dim < 1 || config_.segment_hidden < 1) throw Error("continuous mode needs feature dims");
    leaf_w = s.index_of("leaf.w");
    leaf_b = s.index_of("leaf.b");
    segment_mlp = {s.index_of("segment.w1"), s.index_of("segment.b1"), s.index_of("segment.w2"),
                   s.index_of("segment.b2")};
    check_shape(s, leaf_w, "leaf.w", d, config_.feature_dim);
    check_shape(s, leaf_b, "leaf.b", 1, d);
    check_shape(s, segment_mlp.w1, "segment.w1", config_.segment_hidden, config_.feature_dim);
    check_shape(s, segment_mlp.b1, "segment.b1", 1, config_.segment_hidden);
    check_shape(s, segment_mlp.w2, "segment.w2", 1, config_.segment_hidden);
    check_shape(s, segment_mlp.b2, "segment.b2", 1, 1);
  }
  inside_w = s.index_of("inside.w");
  inside_b = s.index_of("inside.b");
  outside_w = s.index_of("outside.w");
  outside_b = s.index_of("outside.b");
  score = s.index_of("score");
  root = s.index_of("root");
  check_shape(s, inside_w, "inside.w", d, 2 * d);
  check_shape(s, inside_b, "inside.b", 1, d);
  check_shape(s, outside_w, "outside.w", d, 2 * d);
  check_shape(s, outside_b, "outside.b", 1, d);
  check_shape(s, score, "score", d, d);
  check_shape(s, root, "root", 1, d);
}

DioraModel DioraModel::create(const ModelConfig& config, std::uint64_t seed) {
  const int d = config.hidden_dim;
  nn::ParameterStore s;
  std::vector<int> weights;
  if (config.mode == InputMode::kToken) {
    weights.push_back(s.add("embed", config.vocab_size, d));
  } else {
    weights.push_back(s.add("leaf.w", d, config.feature_dim));
    s.add("leaf.b", 1, d);
    const nn::Mlp2 mlp = nn::add_mlp2(s, "segment", config.feature_dim, config.segment_hidden, 1);
    weights.push_back(mlp.w1);
    weights.push_back(mlp.w2);
  }
  weights.push_back(s.add("inside.w", d, 2 * d));
  s.add("inside.b", 1, d);
  weights.push_back(s.add("outside.w", d, 2 * d));
  s.add("outside.b", 1, d);
  weights.push_back(s.add("score", d, d));
  weights.push_back(s.add("root", 1, d));
  Rng rng(seed);
  for (int w : weights) nn::init_uniform(s.at(w), rng);
  return from_parameters(config, std::move(s));
}

DioraModel DioraModel::from_parameters(const ModelConfig& config, nn::ParameterStore store) {
  DioraModel model(config, std::move(store));
  model.bind();
  return model;
}

int ModelInput::length() const {
  return frames ? static_cast<int>(ranges.size()) : static_cast<int>(token_ids.size());
}

InsideOutsideChart::InsideOutsideChart(int length) : n(length) {
  const std::size_t cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  inside_vec.assign(cells, -1);
  inside_score.assign(cells, -1);
  inside_weights.assign(cells, -1);
  max_split_score.assign(cells, 0.0);
  outside_vec.assign(cells, -1);
  outside_score.assign(cells, -1);
  outside_weights.assign(cells, -1);
}

std::vector<Tape::Id> leaf_vectors(Tape& tape, const DioraModel& model, const ModelInput& input) {
  if (input.length() < 1) throw Error("leaf_vectors: empty input");
  std::vector<Tape::Id> out;
  if (model.config().mode == InputMode::kToken) {
    if (input.frames) throw Error("leaf_vectors: token model given frame input");
    for (int id : input.token_ids) {
      const int row = (id < 0 || id >= model.config().vocab_size) ? kUnkId : id;
      out.push_back(tape.parameter_row(model.embed, row));
    }
    return out;
  }
  if (!input.frames) throw Error("leaf_vectors: continuous model given token input");
  if (input.frames->dim != model.config().feature_dim) {
    throw Error("leaf_vectors: feature dimension " + std::to_string(input.frames->dim) + " does not match model's " +
                std::to_string(model.config().feature_dim));
  }
  for (Tape::Id pooled : embed_segments(tape, *input.frames, input.ranges, model.segment_mlp)) {
    out.push_back(tape.affine_tanh(model.leaf_w, model.leaf_b, pooled));
  }
  return out;
}

InsideOutsideChart inside_pass(Tape& tape, const DioraModel& model, const std::vector<Tape::Id>& leaves) {
  const int n = static_cast<int>(leaves.size());
  if (n < 1) throw Error("inside_pass: no leaves");
  InsideOutsideChart chart(n);
  const double zero = 0.0;
  const Tape::Id zero_score = tape.input(std::span<const double>(&zero, 1));
  for (int i = 1; i <= n; ++i) {
    chart.inside_vec[chart.index(i, i)] = leaves[static_cast<std::size_t>(i - 1)];
    chart.inside_score[chart.index(i, i)] = zero_score;
  }
  std::vector<Tape::Id> composed;
  std::vector<Tape::Id> raw;
  for (int width = 2; width <= n; ++width) {
    for (int i = 1; i + width - 1 <= n; ++i) {
      const int j = i + width - 1;
      composed.clear();
      raw.clear();
      for (int k = i; k < j; ++k) {
        const Tape::Id left = chart.inside_vec[chart.index(i, k)];
        const Tape::Id right = chart.inside_vec[chart.index(k + 1, j)];
        composed.push_back(tape.compose(model.inside_w, model.inside_b, left, right));
        const Tape::Id compat = tape.bilinear(left, right, model.score);
        raw.push_back(tape.sum({compat, chart.inside_score[chart.index(i, k)], chart.inside_score[chart.index(k + 1, j)]}));
      }
      const Tape::Id stacked = tape.stack(raw);
      const Tape::Id weights = tape.softmax(stacked);
      const std::size_t cell = chart.index(i, j);
      chart.inside_weights[cell] = weights;
      chart.inside_vec[cell] = tape.normalize(tape.weighted_sum(weights, composed));
      chart.inside_score[cell] = tape.dot(weights, stacked);
      const auto values = tape.value(stacked);
      chart.max_split_score[cell] = *std::max_element(values.begin(), values.end());
    }
  }
  return chart;
}

void outside_pass(Tape& tape, const DioraModel& model, InsideOutsideChart& chart) {
  const int n = chart.n;
  if (n < 1 || chart.inside_vec[chart.index(1, n)] < 0) throw Error("outside_pass: inside pass missing");
  const double zero = 0.0;
  const std::size_t top = chart.index(1, n);
  chart.outside_vec[top] = tape.parameter_row(model.root, 0);
  chart.outside_score[top] = tape.input(std::span<const double>(&zero, 1));
  std::vector<Tape::Id> composed;
  std::vector<Tape::Id> raw;
  for (int width = n - 1; width >= 1; --width) {
    for (int i = 1; i + width - 1 <= n; ++i) {
      const int j = i + width - 1;
      composed.clear();
      raw.clear();
      const auto add = [&](int pi, int pj, int si, int sj) {
        const Tape::Id parent = chart.outside_vec[chart.index(pi, pj)];
        const Tape::Id sibling = chart.inside_vec[chart.index(si, sj)];
        composed.push_back(tape.compose(model.outside_w, model.outside_b, parent, sibling));
        const Tape::Id compat = tape.bilinear(parent, sibling, model.score);
        raw.push_back(tape.sum({compat, chart.outside_score[chart.index(pi, pj)], chart.inside_score[chart.index(si, sj)]}));
      };
      // (i, j) as left child of (i, m), sibling (j+1, m).
      for (int m = j + 1; m <= n; ++m) add(i, m, j + 1, m);
      // (i, j) as right child of (m, j), sibling (m, i-1).
      for (int m = 1; m < i; ++m) add(m, j, m, i - 1);
      const Tape::Id stacked = tape.stack(raw);
      const Tape::Id weights = tape.softmax(stacked);
      const std::size_t cell = chart.index(i, j);
      chart.outside_weights[cell] = weights;
      chart.outside_vec[cell] = tape.normalize(tape.weighted_sum(weights, composed));
      chart.outside_score[cell] = tape.dot(weights, stacked);
    }
  }
  chart.has_outside = true;
}

Tape::Id reconstruction_loss(Tape& tape, const InsideOutsideChart& chart, const std::vector<Tape::Id>& leaves,
                             const std::vector<std::vector<Tape::Id>>& negatives, double margin) {
  if (!chart.has_outside) throw Error("reconstruction_loss: outside pass missing");
  const int n = chart.n;
  if (static_cast<int>(leaves.size()) != n || static_cast<int>(negatives.size()) != n) {
    throw Error("reconstruction_loss: leaf/negative count mismatch");
  }
  std::vector<Tape::Id> terms;
  for (int i = 1; i <= n; ++i) {
    const auto& negs = negatives[static_cast<std::size_t>(i - 1)];
    if (negs.empty()) throw Error("reconstruction_loss: at least one negative sample is required");
    terms.push_back(tape.margin_loss(chart.outside_vec[chart.index(i, i)], leaves[static_cast<std::size_t>(i - 1)],
                                     negs, margin));
  }
  return tape.scale(tape.sum(terms), 1.0 / n);
}

SpanChart span_scores(const DioraModel& model, const ModelInput& input) {
  const int n = input.length();
  if (n < 1) throw Error("parse: empty input");
  Tape tape(model.params());
  const InsideOutsideChart io = inside_pass(tape, model, leaf_vectors(tape, model, input));
  SpanChart chart(n);
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      const std::size_t cell = io.index(i, j);
      chart.set(i, j,
                model.config().chart_score == ChartScore::kAggregate ? tape.scalar(io.inside_score[cell])
                                                                     : io.max_split_score[cell]);
    }
  }
  return chart;
}

Tree parse(const DioraModel& model, const ModelInput& input) {
  if (input.length() == 1) return Tree::leaf();
  return cky_decode(span_scores(model, input)).tree;
}

Tape::Id batch_loss(Tape& tape, const DioraModel& model, const std::vector<const ModelInput*>& batch,
                    int negative_samples, Rng& rng, double margin) {
  if (negative_samples < 1) throw Error("batch_loss: negative_samples must be positive");
  std::vector<std::vector<Tape::Id>> leaves;
  std::vector<Tape::Id> pool;
  for (const ModelInput* input : batch) {
    if (input->length() < 2) continue;
    leaves.push_back(leaf_vectors(tape, model, *input));
    pool.insert(pool.end(), leaves.back().begin(), leaves.back().end());
  }
  if (leaves.empty()) throw Error("batch_loss: batch has no utterance with at least 2 leaves");
  const bool token_mode = model.config().mode == InputMode::kToken;
  const int vocab = model.config().vocab_size;

  std::vector<Tape::Id> losses;
  std::size_t position = 0;
  std::size_t utt = 0;
  for (const ModelInput* input : batch) {
    if (input->length() < 2) continue;
    const auto& utt_leaves = leaves[utt++];
    const int n = static_cast<int>(utt_leaves.size());
    std::vector<std::vector<Tape::Id>> negatives(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i, ++position) {
      auto& negs = negatives[static_cast<std::size_t>(i)];
      for (int s = 0; s < negative_samples; ++s) {
        if (token_mode) {
          // Rows 2..V-1, skipping the gold token (ids outside the table are <unk>).
          int gold = input->token_ids[static_cast<std::size_t>(i)];
          if (gold < 0 || gold >= vocab) gold = kUnkId;
          const bool gold_in_range = gold >= 2;
          const std::size_t choices = static_cast<std::size_t>(vocab - 2) - (gold_in_range ? 1 : 0);
          if (choices == 0) {
            negs.push_back(tape.parameter_row(model.embed, kUnkId));
            continue;
          }
          int row = 2 + static_cast<int>(rng.below(choices));
          if (gold_in_range && row >= gold) ++row;
          negs.push_back(tape.parameter_row(model.embed, row));
        } else {
          std::size_t other = rng.below(pool.size() - 1);
          if (other >= position) ++other;
          negs.push_back(pool[other]);
        }
      }
    }
    InsideOutsideChart chart = inside_pass(tape, model, utt_leaves);
    outside_pass(tape, model, chart);
    losses.push_back(reconstruction_loss(tape, chart, utt_leaves, negatives, margin));
  }
  return tape.scale(tape.sum(losses), 1.0 / static_cast<double>(losses.size()));
}

}  // namespace speechparse
