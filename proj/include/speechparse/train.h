#pragma once

// Minibatch Adam training with validation-loss model selection.

#include <cstdint>
#include <string>
#include <vector>

#include "speechparse/diora.h"

namespace speechparse {

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 5e-3;
  // 0 disables the limit. Token mode stops after 10 epochs, continuous
  // mode after 2000 batches (see defaults_for).
  int max_epochs = 0;
  int max_batches = 0;
  int negative_samples = 20;
  double margin = kDefaultMargin;
  std::uint64_t seed = 0;
  int validation_every = 100;

  static TrainConfig defaults_for(InputMode mode);
  // Throws on non-positive sizes or when neither limit is set.
  void validate() const;
  // `key = value` lines in a fixed order.
  std::string describe() const;
};

struct TrainLogEntry {
  int step = 0;
  // Mean training loss since the previous entry; NaN for the step-0 entry.
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  nn::ParameterStore best;
  int best_step = 0;
  double best_val_loss = 0.0;
  int steps = 0;
  int epochs = 0;
  std::size_t skipped_short = 0;
  std::vector<TrainLogEntry> log;
  // Set when training stopped on a non-finite loss; `best` then holds the
  // last good checkpoint.
  bool aborted = false;
  std::string abort_reason;
};

// `step<TAB>train_loss<TAB>val_loss` per entry.
std::string format_train_log(const std::vector<TrainLogEntry>& log);

// Mean per-utterance reconstruction loss with negatives drawn from a fixed
// seed, so successive calls on the same data are comparable.
double validation_loss(const DioraModel& model, const std::vector<ModelInput>& data, const TrainConfig& config);

// Trains `model` in place (it ends at the last step); the returned `best`
// holds the lowest-validation-loss parameters.
TrainResult train(DioraModel& model, const std::vector<ModelInput>& train_set, const std::vector<ModelInput>& valid_set,
                  const TrainConfig& config);

}  // namespace speechparse
