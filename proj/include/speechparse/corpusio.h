#pragma once

// Corpus assembly from transcript / feature / boundary / tree files,
// vocabulary construction, `key = value` config files, and the synthetic
// grammar corpus generator.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "speechparse/segments.h"
#include "speechparse/treebank.h"

namespace speechparse {

// ---- vocabulary ----------------------------------------------------------

class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kReserved = 2;

  // Reserved entries only.
  Vocabulary();
  // `tokens` excludes the reserved entries; ids start at kReserved.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  // kUnkId for anything not in the vocabulary.
  int id(std::string_view token) const;
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  // Full id -> token list, reserved entries first.
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

inline constexpr std::size_t kDefaultVocabSize = 10000;

// The top_k most frequent tokens, ties broken lexicographically.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& transcripts, std::size_t top_k = kDefaultVocabSize);

// One token per line in id order, reserved entries included.
std::string format_vocab(const Vocabulary& vocab);
Vocabulary parse_vocab(std::string_view text, const std::string& source);
void write_vocab_file(const std::string& path, const Vocabulary& vocab);
Vocabulary read_vocab_file(const std::string& path);

// Lowercases ASCII letters and drops tokens made only of punctuation.
std::vector<std::string> normalize_tokens(const std::vector<std::string>& tokens);

// ---- transcripts ---------------------------------------------------------

// `utterance_id<TAB>space-separated tokens` per line.
using TranscriptMap = std::map<std::string, std::vector<std::string>>;
TranscriptMap parse_transcripts(std::string_view text, const std::string& source);
std::string format_transcripts(const TranscriptMap& transcripts);
TranscriptMap read_transcript_file(const std::string& path);
void write_transcript_file(const std::string& path, const TranscriptMap& transcripts);

// ---- corpus --------------------------------------------------------------

struct CorpusRecord {
  std::string utterance_id;
  std::optional<std::vector<std::string>> tokens;
  // Index into Corpus::features.utterances, -1 when absent.
  int feature_index = -1;
  std::optional<SegmentSequence> boundaries;
  std::optional<Tree> tree;
};

struct CorpusSources {
  std::string transcripts;
  std::string features;
  std::string boundaries;
  std::string trees;
  BracketStyle tree_style = BracketStyle::kUnlabeled;
};

// Fields a record must carry to be kept.
struct CorpusRequirements {
  bool tokens = false;
  bool features = false;
  bool boundaries = false;
  bool tree = false;
};

struct Corpus {
  FeatureSet features;
  std::vector<CorpusRecord> records;
  // Ids dropped for lacking a required field, sorted.
  std::vector<std::string> skipped;

  const FrameMatrix& frames(const CorpusRecord& record) const;
};

// Joins every given source (empty path = absent) on utterance id; records
// come out sorted by id. Throws on duplicate ids, format violations, and
// count mismatches between tokens, boundaries and tree leaves.
Corpus load_corpus(const CorpusSources& sources, const CorpusRequirements& required);

// ---- config files --------------------------------------------------------

// `key = value` lines; '#' starts a comment. Values are read through the
// typed getters, and check_all_used() rejects keys nobody asked for.
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile parse(std::string_view text, const std::string& source);
  static ConfigFile read(const std::string& path);

  bool has(const std::string& key) const;
  std::optional<std::string> get_string(const std::string& key);
  std::optional<double> get_double(const std::string& key);
  std::optional<long long> get_int(const std::string& key);
  // Throws FormatError naming the first key that was never read.
  void check_all_used() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
    bool used = false;
  };
  const Entry* find(const std::string& key);

  std::string source_;
  std::map<std::string, Entry> entries_;
};

// ---- synthetic corpus ----------------------------------------------------

enum class HeadDirection { kInitial, kFinal };
std::string to_string(HeadDirection direction);
HeadDirection parse_head_direction(std::string_view text);

struct SynthGrammarConfig {
  int vocab_size = 200;
  HeadDirection direction = HeadDirection::kInitial;
  // Probability that an internal node takes the canonical split (one leaf
  // on the head side); otherwise the split point is uniform.
  double branching_p = 0.9;
  double mean_duration = 0.45;
  // Durations are uniform in [mean - jitter, mean + jitter], rounded to
  // whole frames.
  double duration_jitter = 0.25;
  int feature_dim = 32;
  double frame_shift = 0.02;
  double noise_stdev = 0.1;
  // Probability that a word is drawn from the class tied to its tree
  // position rather than from the whole vocabulary.
  double position_coupling = 0.8;
  std::uint64_t seed = 1;

  // Throws Error on out-of-range values.
  void validate() const;
  // Reads the keys above from a config file (missing keys keep defaults).
  void load(ConfigFile& file);
  std::string describe() const;
};

struct SynthUtterance {
  std::string utterance_id;
  std::vector<std::string> tokens;
  FrameMatrix frames;
  SegmentSequence boundaries;
  Tree tree = Tree::leaf();
};

// `n_utts` utterances with lengths uniform in [min_len, max_len]. Word
// identities and their base vectors depend only on config.seed; `stream`
// selects an independent draw of utterances from the same grammar. Ids are
// `prefix` followed by a zero-padded index.
std::vector<SynthUtterance> synth_corpus(const SynthGrammarConfig& config, int n_utts, int min_len, int max_len,
                                         std::uint64_t stream = 0, const std::string& prefix = "utt");

// Base vector of word `rank` (0-based, most frequent first).
std::vector<float> synth_word_vector(const SynthGrammarConfig& config, int rank);
std::string synth_word(int rank);

}  // namespace speechparse
