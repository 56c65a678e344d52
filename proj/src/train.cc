#include "speechparse/train.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "speechparse/fileio.h"

namespace speechparse {

namespace {

// Validation negatives always come from the same stream.
constexpr std::uint64_t kValidationSeedSalt = 0x76616c6964ULL;
constexpr std::uint64_t kTrainSeedSalt = 0x747261696eULL;

std::vector<std::size_t> trainable(const std::vector<ModelInput>& data) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (data[k].length() >= 2) out.push_back(k);
  }
  return out;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

// Shuffle, bucket by length, cut into batches, shuffle batch order.
std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> items, const std::vector<ModelInput>& data,
                                                   int batch_size, Rng& rng) {
  shuffle(items, rng);
  std::stable_sort(items.begin(), items.end(),
                   [&](std::size_t a, std::size_t b) { return data[a].length() < data[b].length(); });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < items.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(items.size(), start + static_cast<std::size_t>(batch_size));
    batches.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(start), items.begin() + static_cast<std::ptrdiff_t>(end));
  }
  shuffle(batches, rng);
  return batches;
}

}  // namespace

TrainConfig TrainConfig::defaults_for(InputMode mode) {
  TrainConfig config;
  if (mode == InputMode::kToken) {
    config.max_epochs = 10;
  } else {
    config.max_batches = 2000;
  }
  return config;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (max_epochs < 0 || max_batches < 0) throw Error("max_epochs/max_batches must be non-negative");
  if (max_epochs == 0 && max_batches == 0) throw Error("one of max_epochs or max_batches must be set");
  if (negative_samples < 1) throw Error("negative_samples must be positive");
  if (!(margin > 0.0)) throw Error("margin must be positive");
  if (validation_every < 1) throw Error("validation_every must be positive");
}

std::string TrainConfig::describe() const {
  std::string out;
  out += "batch_size = " + std::to_string(batch_size) + "\n";
  out += "learning_rate = " + fileio::format_double(learning_rate) + "\n";
  out += "max_epochs = " + std::to_string(max_epochs) + "\n";
  out += "max_batches = " + std::to_string(max_batches) + "\n";
  out += "negative_samples = " + std::to_string(negative_samples) + "\n";
  out += "margin = " + fileio::format_double(margin) + "\n";
  out += "seed = " + std::to_string(seed) + "\n";
  out += "validation_every = " + std::to_string(validation_every) + "\n";
  return out;
}

std::string format_train_log(const std::vector<TrainLogEntry>& log) {
  std::string out = "step\ttrain_loss\tval_loss\n";
  for (const auto& e : log) {
    out += std::to_string(e.step);
    out += '\t';
    out += std::isnan(e.train_loss) ? std::string("-") : fileio::format_fixed(e.train_loss, 6);
    out += '\t';
    out += fileio::format_fixed(e.val_loss, 6);
    out += '\n';
  }
  return out;
}

double validation_loss(const DioraModel& model, const std::vector<ModelInput>& data, const TrainConfig& config) {
  std::vector<std::size_t> items = trainable(data);
  if (items.empty()) throw Error("validation set has no utterance with at least 2 leaves");
  std::stable_sort(items.begin(), items.end(),
                   [&](std::size_t a, std::size_t b) { return data[a].length() < data[b].length(); });
  Rng rng(config.seed ^ kValidationSeedSalt);
  double total = 0.0;
  for (std::size_t start = 0; start < items.size(); start += static_cast<std::size_t>(config.batch_size)) {
    const std::size_t end = std::min(items.size(), start + static_cast<std::size_t>(config.batch_size));
    std::vector<const ModelInput*> batch;
    for (std::size_t k = start; k < end; ++k) batch.push_back(&data[items[k]]);
    nn::Tape tape(model.params());
    const auto loss = batch_loss(tape, model, batch, config.negative_samples, rng, config.margin);
    total += tape.scalar(loss) * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(items.size());
}

TrainResult train(DioraModel& model, const std::vector<ModelInput>& train_set, const std::vector<ModelInput>& valid_set,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw Error("training corpus is empty");
  if (valid_set.empty()) throw Error("validation corpus is empty");
  const std::vector<std::size_t> items = trainable(train_set);
  if (items.empty()) throw Error("training corpus has no utterance with at least 2 leaves");

  TrainResult result;
  result.skipped_short = train_set.size() - items.size();
  result.best = model.params();
  result.best_val_loss = validation_loss(model, valid_set, config);
  result.log.push_back({0, std::numeric_limits<double>::quiet_NaN(), result.best_val_loss});

  Rng rng(config.seed ^ kTrainSeedSalt);
  double interval_loss = 0.0;
  int interval_count = 0;
  int step = 0;

  const auto validate_now = [&] {
    const double val = validation_loss(model, valid_set, config);
    result.log.push_back({step, interval_count ? interval_loss / interval_count : 0.0, val});
    interval_loss = 0.0;
    interval_count = 0;
    if (val < result.best_val_loss) {
      result.best_val_loss = val;
      result.best_step = step;
      result.best = model.params();
    }
  };

  bool done = false;
  int epoch = 0;
  while (!done && (config.max_epochs == 0 || epoch < config.max_epochs)) {
    for (const auto& batch_items : make_batches(items, train_set, config.batch_size, rng)) {
      std::vector<const ModelInput*> batch;
      for (std::size_t k : batch_items) batch.push_back(&train_set[k]);
      nn::Tape tape(model.params());
      const auto loss = batch_loss(tape, model, batch, config.negative_samples, rng, config.margin);
      const double value = tape.scalar(loss);
      if (!std::isfinite(value)) {
        result.aborted = true;
        result.abort_reason = "non-finite training loss at step " + std::to_string(step + 1);
        done = true;
        break;
      }
      tape.backward(loss);
      try {
        nn::adam_step(model.params(), config.learning_rate);
      } catch (const nn::NumericError& e) {
        result.aborted = true;
        result.abort_reason = std::string(e.what()) + " at step " + std::to_string(step + 1);
        model.params().zero_grad();
        done = true;
        break;
      }
      ++step;
      interval_loss += value;
      ++interval_count;
      if (step % config.validation_every == 0) validate_now();
      if (config.max_batches > 0 && step >= config.max_batches) {
        done = true;
        break;
      }
    }
    ++epoch;
  }
  if (!result.aborted && result.log.back().step != step) validate_now();
  result.steps = step;
  result.epochs = epoch;
  return result;
}

}  // namespace speechparse
