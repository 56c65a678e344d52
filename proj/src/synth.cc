#include <algorithm>
#include <cmath>
#include <cstdio>

#include "speechparse/corpusio.h"
#include "speechparse/fileio.h"

namespace speechparse {

namespace {

constexpr std::uint64_t kWordSalt = 0x776f7264766563ULL;
constexpr std::uint64_t kUtteranceSalt = 0x7574746572ULL;
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Position classes: (side, depth bucket) of a leaf.
constexpr int kDepthBuckets = 4;
constexpr int kNumClasses = 2 * kDepthBuckets;

int position_class(bool right_child, int depth) {
  const int bucket = std::clamp(depth, 1, kDepthBuckets) - 1;
  return (right_child ? kDepthBuckets : 0) + bucket;
}

// Cumulative Zipf(1) weights over `ranks`.
struct ZipfTable {
  std::vector<int> ranks;
  std::vector<double> cumulative;

  explicit ZipfTable(std::vector<int> r) : ranks(std::move(r)) {
    double total = 0.0;
    for (std::size_t k = 0; k < ranks.size(); ++k) {
      total += 1.0 / static_cast<double>(k + 1);
      cumulative.push_back(total);
    }
  }

  int sample(Rng& rng) const {
    const double u = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto k = std::min(static_cast<std::size_t>(it - cumulative.begin()), ranks.size() - 1);
    return ranks[k];
  }
};

struct Grammar {
  const SynthGrammarConfig& config;
  ZipfTable global;
  std::vector<ZipfTable> classes;

  explicit Grammar(const SynthGrammarConfig& c) : config(c), global(all_ranks(c.vocab_size)) {
    std::vector<std::vector<int>> members(kNumClasses);
    for (int r = 0; r < c.vocab_size; ++r) members[static_cast<std::size_t>(r % kNumClasses)].push_back(r);
    for (auto& m : members) classes.emplace_back(std::move(m));
  }

  static std::vector<int> all_ranks(int n) {
    std::vector<int> r(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) r[static_cast<std::size_t>(k)] = k;
    return r;
  }

  int word(Rng& rng, bool right_child, int depth) const {
    if (rng.uniform() < config.position_coupling) {
      return classes[static_cast<std::size_t>(position_class(right_child, depth))].sample(rng);
    }
    return global.sample(rng);
  }

  // Builds a subtree over `n` leaves, sampling words left to right.
  TreeNode grow(Rng& rng, int n, bool right_child, int depth, std::vector<int>& words) const {
    TreeNode node;
    if (n == 1) {
      const int w = word(rng, right_child, depth);
      words.push_back(w);
      node.leaf = 1;
      node.token = synth_word(w);
      return node;
    }
    int left_size = 0;
    if (rng.uniform() < config.branching_p) {
      left_size = config.direction == HeadDirection::kInitial ? 1 : n - 1;
    } else {
      left_size = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(n - 1)));
    }
    node.children.push_back(grow(rng, left_size, false, depth + 1, words));
    node.children.push_back(grow(rng, n - left_size, true, depth + 1, words));
    return node;
  }
};

}  // namespace

std::string to_string(HeadDirection direction) {
  return direction == HeadDirection::kInitial ? "head-initial" : "head-final";
}

HeadDirection parse_head_direction(std::string_view text) {
  if (text == "head-initial") return HeadDirection::kInitial;
  if (text == "head-final") return HeadDirection::kFinal;
  throw Error("unknown direction '" + std::string(text) + "' (expected head-initial|head-final)");
}

void SynthGrammarConfig::validate() const {
  if (vocab_size < kNumClasses) throw Error("synth: vocab_size must be at least " + std::to_string(kNumClasses));
  if (!(branching_p >= 0.0 && branching_p <= 1.0)) throw Error("synth: branching_p must be in [0, 1]");
  if (!(position_coupling >= 0.0 && position_coupling <= 1.0)) {
    throw Error("synth: position_coupling must be in [0, 1]");
  }
  if (!(mean_duration > 0.0)) throw Error("synth: mean_duration must be positive");
  if (!(duration_jitter >= 0.0 && duration_jitter < mean_duration)) {
    throw Error("synth: duration_jitter must be in [0, mean_duration)");
  }
  if (feature_dim < 1) throw Error("synth: feature_dim must be positive");
  if (!(frame_shift > 0.0)) throw Error("synth: frame_shift must be positive");
  if (!(noise_stdev >= 0.0) || !std::isfinite(noise_stdev)) throw Error("synth: noise_stdev must be non-negative");
}

void SynthGrammarConfig::load(ConfigFile& file) {
  if (auto v = file.get_int("vocab_size")) vocab_size = static_cast<int>(*v);
  if (auto v = file.get_string("direction")) direction = parse_head_direction(*v);
  if (auto v = file.get_double("branching_p")) branching_p = *v;
  if (auto v = file.get_double("mean_duration")) mean_duration = *v;
  if (auto v = file.get_double("duration_jitter")) duration_jitter = *v;
  if (auto v = file.get_int("feature_dim")) feature_dim = static_cast<int>(*v);
  if (auto v = file.get_double("frame_shift")) frame_shift = *v;
  if (auto v = file.get_double("noise_stdev")) noise_stdev = *v;
  if (auto v = file.get_double("position_coupling")) position_coupling = *v;
  if (auto v = file.get_int("seed")) seed = static_cast<std::uint64_t>(*v);
}

std::string SynthGrammarConfig::describe() const {
  std::string out;
  out += "vocab_size = " + std::to_string(vocab_size) + "\n";
  out += "direction = " + to_string(direction) + "\n";
  out += "branching_p = " + fileio::format_double(branching_p) + "\n";
  out += "mean_duration = " + fileio::format_double(mean_duration) + "\n";
  out += "duration_jitter = " + fileio::format_double(duration_jitter) + "\n";
  out += "feature_dim = " + std::to_string(feature_dim) + "\n";
  out += "frame_shift = " + fileio::format_double(frame_shift) + "\n";
  out += "noise_stdev = " + fileio::format_double(noise_stdev) + "\n";
  out += "position_coupling = " + fileio::format_double(position_coupling) + "\n";
  out += "seed = " + std::to_string(seed) + "\n";
  return out;
}

std::string synth_word(int rank) { return "w" + std::to_string(rank); }

std::vector<float> synth_word_vector(const SynthGrammarConfig& config, int rank) {
  Rng rng((config.seed ^ kWordSalt) * kGolden + static_cast<std::uint64_t>(rank));
  std::vector<float> v(static_cast<std::size_t>(config.feature_dim));
  for (float& x : v) x = static_cast<float>(rng.normal());
  return v;
}

std::vector<SynthUtterance> synth_corpus(const SynthGrammarConfig& config, int n_utts, int min_len, int max_len,
                                         std::uint64_t stream, const std::string& prefix) {
  config.validate();
  if (n_utts < 1) throw Error("synth: number of utterances must be positive");
  if (min_len < 1 || max_len < min_len) throw Error("synth: invalid length range");

  const Grammar grammar(config);
  std::vector<std::vector<float>> base(static_cast<std::size_t>(config.vocab_size));
  for (int r = 0; r < config.vocab_size; ++r) base[static_cast<std::size_t>(r)] = synth_word_vector(config, r);

  Rng rng((config.seed ^ kUtteranceSalt) * kGolden + stream);
  const int width = std::max(5, static_cast<int>(std::to_string(n_utts - 1).size()));
  const int lo_frames = std::max(1, static_cast<int>(std::lround((config.mean_duration - config.duration_jitter) / config.frame_shift)));
  std::vector<SynthUtterance> out;
  out.reserve(static_cast<std::size_t>(n_utts));
  for (int u = 0; u < n_utts; ++u) {
    SynthUtterance utt;
    std::string index = std::to_string(u);
    utt.utterance_id = prefix + std::string(static_cast<std::size_t>(width) - std::min(index.size(), static_cast<std::size_t>(width)), '0') + index;
    const int n = min_len + static_cast<int>(rng.below(static_cast<std::size_t>(max_len - min_len + 1)));
    std::vector<int> words;
    utt.tree = Tree(grammar.grow(rng, n, false, 0, words));
    std::vector<int> frames_per_word;
    int total = 0;
    for (std::size_t k = 0; k < words.size(); ++k) {
      const double d = rng.uniform(config.mean_duration - config.duration_jitter, config.mean_duration + config.duration_jitter);
      const int f = std::max(lo_frames, static_cast<int>(std::lround(d / config.frame_shift)));
      frames_per_word.push_back(f);
      total += f;
    }
    utt.frames = FrameMatrix(total, config.feature_dim, config.frame_shift);
    utt.boundaries.utterance_id = utt.utterance_id;
    int t = 0;
    for (std::size_t k = 0; k < words.size(); ++k) {
      const auto& b = base[static_cast<std::size_t>(words[k])];
      utt.tokens.push_back(synth_word(words[k]));
      utt.boundaries.words.push_back(utt.tokens.back());
      utt.boundaries.segments.push_back({t * config.frame_shift, (t + frames_per_word[k]) * config.frame_shift});
      for (int f = 0; f < frames_per_word[k]; ++f, ++t) {
        auto row = utt.frames.frame(t);
        for (std::size_t c = 0; c < b.size(); ++c) {
          row[c] = b[c] + static_cast<float>(config.noise_stdev * rng.normal());
        }
      }
    }
    out.push_back(std::move(utt));
  }
  return out;
}

}  // namespace speechparse
