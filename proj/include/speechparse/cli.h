#pragma once

// Commands behind the `speechparse` executable. Each writes its outputs
// plus a manifest.txt into an output directory and returns normally, or
// throws; run_cli maps exceptions to exit codes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "speechparse/common.h"
#include "speechparse/corpusio.h"
#include "speechparse/diora.h"
#include "speechparse/evalign.h"
#include "speechparse/train.h"

namespace speechparse::cli {

inline constexpr const char* kArtifactVersion = "1.0.0";

// Bad flags or flag combinations (exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Standard file names inside a corpus directory.
inline constexpr const char* kTranscriptsFile = "transcripts.tsv";
inline constexpr const char* kFeaturesFile = "features.spvf";
inline constexpr const char* kBoundariesFile = "boundaries.tsv";
inline constexpr const char* kTreesFile = "trees.tsv";

// Files of one corpus; a directory fills in whichever standard files it
// holds, and explicit paths override.
struct CorpusPaths {
  std::string dir;
  std::string transcripts;
  std::string features;
  std::string boundaries;
  std::string trees;

  CorpusSources resolve() const;
};

// oracle | fixed:<seconds> | file:<path>
struct SegmentationSource {
  enum class Kind { kOracle, kFixed, kFile };
  Kind kind = Kind::kOracle;
  double interval = 0.5;
  std::string path;

  static SegmentationSource parse(const std::string& text);
  std::string describe() const;
};

// key = value lines with input digests; no timestamps.
class Manifest {
 public:
  explicit Manifest(std::string command);
  void set(const std::string& key, const std::string& value);
  // Records the path and its SHA-256 (skipped when `path` is empty).
  void input(const std::string& name, const std::string& path);
  void output(const std::string& name, const std::string& path);
  void config_block(const std::string& prefix, const std::string& describe_text);
  std::string str() const;
  void write(const std::string& dir) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Persisted model description (model.cfg next to model.spvc).
std::string format_model_config(const ModelConfig& config);
ModelConfig parse_model_config(ConfigFile& file);

struct TrainOptions {
  InputMode mode = InputMode::kToken;
  CorpusPaths train;
  CorpusPaths valid;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  SegmentationSource segmentation;
  std::string out_dir;
  bool quiet = false;
};
// Writes model.spvc, model.cfg, vocab.txt (token mode), train_log.tsv.
TrainResult cmd_train(const TrainOptions& options);

struct ParseOptions {
  std::string model_dir;
  CorpusPaths corpus;
  SegmentationSource segmentation;
  std::string out_dir;
};
// Writes trees.tsv and segments.tsv (the segmentation actually used).
void cmd_parse(const ParseOptions& options);

struct EvalOptions {
  CorpusPaths gold;
  // One entry per run: a parse output directory, or a trees file.
  std::vector<std::string> pred;
  // Segment files paired with `pred` entries that are plain files.
  std::vector<std::string> pred_segments;
  bool allow_unmapped = false;
  std::string out_dir;
};
// Writes report.tsv/report.txt for a single run, or report.<k>.tsv per run
// plus summary.tsv for several. Returns the per-run reports.
std::vector<F1Report> cmd_eval(const EvalOptions& options);

struct BaselineOptions {
  std::string direction = "right";
  CorpusPaths gold;
  std::string out_dir;
};
// Rule-based trees over the gold leaf counts; segments.tsv copies the gold
// boundaries when present.
void cmd_baseline(const BaselineOptions& options);

struct SynthOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};
// Writes train/, valid/ and test/ corpus directories.
void cmd_synth(const SynthOptions& options);

// Full command line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace speechparse::cli
