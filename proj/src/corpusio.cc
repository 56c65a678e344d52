#include "speechparse/corpusio.h"

#include <algorithm>
#include <cctype>
#include <set>

#include "speechparse/fileio.h"

namespace speechparse {

// ---- vocabulary ----------------------------------------------------------

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  tokens_ = {"<pad>", "<unk>"};
  tokens_.insert(tokens_.end(), tokens.begin(), tokens.end());
  for (std::size_t k = 0; k < tokens_.size(); ++k) {
    if (tokens_[k].empty()) throw Error("vocabulary: empty token");
    if (!ids_.emplace(tokens_[k], static_cast<int>(k)).second) throw Error("vocabulary: duplicate token " + tokens_[k]);
  }
}

int Vocabulary::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& transcripts, std::size_t top_k) {
  if (top_k == 0) throw Error("build_vocab: top_k must be positive");
  if (transcripts.empty()) throw Error("build_vocab: no transcripts");
  std::map<std::string, long> counts;
  for (const auto& line : transcripts) {
    for (const auto& t : line) {
      if (t == "<pad>" || t == "<unk>") continue;
      ++counts[t];
    }
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  // `counts` is already in lexicographic order, so a stable sort on the
  // count alone breaks ties lexicographically.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > top_k) ranked.resize(top_k);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [t, c] : ranked) tokens.push_back(t);
  return Vocabulary(tokens);
}

std::string format_vocab(const Vocabulary& vocab) {
  std::string out;
  for (const auto& t : vocab.tokens()) out += t + "\n";
  return out;
}

Vocabulary parse_vocab(std::string_view text, const std::string& source) {
  const auto lines = fileio::split_lines(text);
  if (lines.size() < 2 || lines[0] != "<pad>" || lines[1] != "<unk>") {
    throw FormatError(source, 1, "vocabulary must start with <pad> and <unk>");
  }
  std::vector<std::string> tokens;
  std::set<std::string_view> seen;
  for (std::size_t k = 2; k < lines.size(); ++k) {
    if (lines[k].empty() || lines[k].find_first_of(" \t") != std::string_view::npos) {
      throw FormatError(source, k + 1, "bad vocabulary token");
    }
    if (!seen.insert(lines[k]).second) throw FormatError(source, k + 1, "duplicate token " + std::string(lines[k]));
    tokens.emplace_back(lines[k]);
  }
  return Vocabulary(tokens);
}

void write_vocab_file(const std::string& path, const Vocabulary& vocab) {
  fileio::write_file_atomic(path, format_vocab(vocab));
}

Vocabulary read_vocab_file(const std::string& path) { return parse_vocab(fileio::read_file(path), path); }

std::vector<std::string> normalize_tokens(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    const bool punct_only = std::all_of(t.begin(), t.end(), [](char c) { return std::ispunct(static_cast<unsigned char>(c)); });
    if (t.empty() || punct_only) continue;
    std::string lower = t;
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(lower));
  }
  return out;
}

// ---- transcripts ---------------------------------------------------------

TranscriptMap parse_transcripts(std::string_view text, const std::string& source) {
  TranscriptMap out;
  std::size_t line_no = 0;
  for (std::string_view line : fileio::split_lines(text)) {
    ++line_no;
    if (fileio::trim(line).empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) throw FormatError(source, line_no, "expected utterance_id<TAB>tokens");
    const std::string id(fileio::trim(line.substr(0, tab)));
    if (id.empty()) throw FormatError(source, line_no, "empty utterance id");
    std::vector<std::string> tokens;
    for (auto t : fileio::split_whitespace(line.substr(tab + 1))) tokens.emplace_back(t);
    if (tokens.empty()) throw FormatError(source, line_no, "utterance " + id + " has no tokens");
    if (!out.emplace(id, std::move(tokens)).second) throw FormatError(source, line_no, "duplicate utterance id " + id);
  }
  return out;
}

std::string format_transcripts(const TranscriptMap& transcripts) {
  std::string out;
  for (const auto& [id, tokens] : transcripts) {
    out += id;
    out += '\t';
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      if (k) out += ' ';
      out += tokens[k];
    }
    out += '\n';
  }
  return out;
}

TranscriptMap read_transcript_file(const std::string& path) { return parse_transcripts(fileio::read_file(path), path); }

void write_transcript_file(const std::string& path, const TranscriptMap& transcripts) {
  fileio::write_file_atomic(path, format_transcripts(transcripts));
}

// ---- corpus --------------------------------------------------------------

const FrameMatrix& Corpus::frames(const CorpusRecord& record) const {
  if (record.feature_index < 0) throw Error("utterance " + record.utterance_id + " has no features");
  return features.utterances.at(static_cast<std::size_t>(record.feature_index)).second;
}

Corpus load_corpus(const CorpusSources& sources, const CorpusRequirements& required) {
  if (sources.transcripts.empty() && sources.features.empty() && sources.boundaries.empty() && sources.trees.empty()) {
    throw Error("load_corpus: no input files given");
  }
  Corpus corpus;
  std::map<std::string, CorpusRecord> records;
  const auto record = [&](const std::string& id) -> CorpusRecord& {
    auto& r = records[id];
    r.utterance_id = id;
    return r;
  };
  if (!sources.transcripts.empty()) {
    for (auto& [id, tokens] : read_transcript_file(sources.transcripts)) record(id).tokens = std::move(tokens);
  }
  if (!sources.features.empty()) {
    corpus.features = read_feature_file(sources.features);
    for (std::size_t k = 0; k < corpus.features.utterances.size(); ++k) {
      record(corpus.features.utterances[k].first).feature_index = static_cast<int>(k);
    }
  }
  if (!sources.boundaries.empty()) {
    for (auto& [id, segs] : read_boundary_file(sources.boundaries)) record(id).boundaries = std::move(segs);
  }
  if (!sources.trees.empty()) {
    for (auto& [id, tree] : read_tree_file(sources.trees, sources.tree_style)) record(id).tree = std::move(tree);
  }

  for (auto& [id, r] : records) {
    const bool keep = (!required.tokens || r.tokens) && (!required.features || r.feature_index >= 0) &&
                      (!required.boundaries || r.boundaries) && (!required.tree || r.tree);
    if (!keep) {
      corpus.skipped.push_back(id);
      continue;
    }
    std::vector<std::pair<std::string, std::size_t>> counts;
    if (r.tokens) counts.emplace_back("transcript tokens", r.tokens->size());
    if (r.boundaries) counts.emplace_back("boundary segments", r.boundaries->size());
    if (r.tree) counts.emplace_back("tree leaves", static_cast<std::size_t>(r.tree->num_leaves()));
    for (const auto& [what, count] : counts) {
      if (count != counts.front().second) {
        throw Error("utterance " + id + ": " + std::to_string(counts.front().second) + " " + counts.front().first +
                    " but " + std::to_string(count) + " " + what);
      }
    }
    if (r.boundaries && r.feature_index >= 0) {
      const FrameMatrix& f = corpus.frames(r);
      const double end = r.boundaries->segments.back().end;
      if (end > f.duration() + f.frame_shift) {
        throw Error("utterance " + id + ": boundaries end at " + fileio::format_double(end) + " s but features cover " +
                    fileio::format_double(f.duration()) + " s");
      }
    }
    corpus.records.push_back(std::move(r));
  }
  return corpus;
}

// ---- config files --------------------------------------------------------

ConfigFile ConfigFile::parse(std::string_view text, const std::string& source) {
  ConfigFile cfg;
  cfg.source_ = source;
  std::size_t line_no = 0;
  for (std::string_view line : fileio::split_lines(text)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = fileio::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError(source, line_no, "expected key = value");
    const std::string key(fileio::trim(line.substr(0, eq)));
    const std::string value(fileio::trim(line.substr(eq + 1)));
    if (key.empty()) throw FormatError(source, line_no, "empty key");
    if (value.empty()) throw FormatError(source, line_no, "empty value for " + key);
    if (!cfg.entries_.emplace(key, Entry{value, line_no, false}).second) {
      throw FormatError(source, line_no, "duplicate key " + key);
    }
  }
  return cfg;
}

ConfigFile ConfigFile::read(const std::string& path) { return parse(fileio::read_file(path), path); }

bool ConfigFile::has(const std::string& key) const { return entries_.count(key) > 0; }

const ConfigFile::Entry* ConfigFile::find(const std::string& key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  it->second.used = true;
  return &it->second;
}

std::optional<std::string> ConfigFile::get_string(const std::string& key) {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  return e->value;
}

std::optional<double> ConfigFile::get_double(const std::string& key) {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  double v = 0.0;
  if (!fileio::parse_double(e->value, v)) throw FormatError(source_, e->line, key + ": expected a number");
  return v;
}

std::optional<long long> ConfigFile::get_int(const std::string& key) {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  long long v = 0;
  if (!fileio::parse_int(e->value, v)) throw FormatError(source_, e->line, key + ": expected an integer");
  return v;
}

void ConfigFile::check_all_used() const {
  for (const auto& [key, e] : entries_) {
    if (!e.used) throw FormatError(source_, e.line, "unknown key " + key);
  }
}

}  // namespace speechparse
