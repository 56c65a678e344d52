#include <doctest.h>

#include <filesystem>

#include "speechparse/corpusio.h"
#include "speechparse/fileio.h"
#include "speechparse/nn/kernel.h"

using namespace speechparse;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> lines(std::initializer_list<std::string> l) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : l) {
    std::vector<std::string> toks;
    for (auto t : fileio::split(s, ' ')) toks.emplace_back(t);
    out.push_back(std::move(toks));
  }
  return out;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int rank_of(const std::string& word) { return std::stoi(word.substr(1)); }

}  // namespace

TEST_CASE("vocabulary") {
  const Vocabulary v = build_vocab(lines({"a b", "a c"}), 2);
  CHECK(v.tokens() == std::vector<std::string>{"<pad>", "<unk>", "a", "b"});
  CHECK(v.id("a") == 2);
  CHECK(v.id("c") == Vocabulary::kUnkId);
  CHECK(v.encode({"b", "zzz", "a"}) == std::vector<int>{3, 1, 2});

  const Vocabulary all = build_vocab(lines({"x y y", "z y"}), 100);
  CHECK(all.tokens() == std::vector<std::string>{"<pad>", "<unk>", "y", "x", "z"});
  CHECK(build_vocab(lines({"x y y", "z y"}), 100) == all);
  CHECK(build_vocab(lines({"z y", "x y y"}), 100) == all);
  CHECK(build_vocab(lines({"<unk> a"}), 10).size() == 3);
  CHECK_THROWS_AS(build_vocab(lines({"a"}), 0), Error);
  CHECK_THROWS_AS(build_vocab({}, 5), Error);
  CHECK(build_vocab(lines({"a b c d e f"})).size() == 8);

  CHECK(parse_vocab(format_vocab(all), "t") == all);
  CHECK_THROWS_AS(parse_vocab("a\nb\n", "t"), FormatError);
  CHECK_THROWS_AS(parse_vocab("<pad>\n<unk>\na\na\n", "t"), FormatError);
  const TempDir dir("speechparse_vocab_test");
  write_vocab_file(dir.file("vocab.txt"), all);
  CHECK(read_vocab_file(dir.file("vocab.txt")) == all);

  CHECK(normalize_tokens({"The", "dog", ",", "BARKS", "...", "it's"}) ==
        std::vector<std::string>{"the", "dog", "barks", "it's"});
}

TEST_CASE("transcripts") {
  const auto t = parse_transcripts("u2\tthe dog\nu1\ta  cat runs\n", "t");
  CHECK(t.at("u1") == std::vector<std::string>{"a", "cat", "runs"});
  CHECK(parse_transcripts(format_transcripts(t), "t") == t);
  CHECK_THROWS_AS(parse_transcripts("u1\ta\nu1\tb\n", "t"), FormatError);
  CHECK_THROWS_AS(parse_transcripts("u1 a b\n", "t"), FormatError);
  CHECK_THROWS_AS(parse_transcripts("u1\t \n", "t"), FormatError);
}

TEST_CASE("corpus loading") {
  const TempDir dir("speechparse_corpus_test");
  fileio::write_file_atomic(dir.file("t.tsv"), "a\tx y\nb\tx y z\nc\tw\n");
  fileio::write_file_atomic(dir.file("trees.tsv"), "a\t(x y)\nb\t(x (y z))\nd\t(p q)\n");
  FeatureSet fs_;
  fs_.dim = 2;
  for (const char* id : {"a", "b"}) {
    FrameMatrix m(50, 2, 0.02);
    fs_.utterances.push_back({id, m});
  }
  write_feature_file(dir.file("f.spvf"), fs_);
  fileio::write_file_atomic(dir.file("b.tsv"), "a\t0\t0\t0.5\na\t1\t0.5\t1.0\nb\t0\t0\t0.3\nb\t1\t0.3\t0.6\nb\t2\t0.6\t1.0\n");

  // Transcripts only: token mode.
  Corpus c = load_corpus({dir.file("t.tsv"), "", "", ""}, {true, false, false, false});
  CHECK(c.records.size() == 3);
  CHECK(c.skipped.empty());

  // Trees without features are skipped and counted.
  c = load_corpus({"", dir.file("f.spvf"), dir.file("b.tsv"), dir.file("trees.tsv")}, {false, true, true, true});
  REQUIRE(c.records.size() == 2);
  CHECK(c.records[0].utterance_id == "a");
  CHECK(c.frames(c.records[1]).num_frames == 50);
  CHECK(c.records[1].boundaries->size() == 3);
  CHECK(c.skipped == std::vector<std::string>{"d"});

  // Token and boundary counts must agree.
  fileio::write_file_atomic(dir.file("t2.tsv"), "a\tx y z\n");
  CHECK_THROWS_AS(load_corpus({dir.file("t2.tsv"), "", dir.file("b.tsv"), ""}, {true, false, true, false}), Error);
  // Tree leaves must match tokens.
  fileio::write_file_atomic(dir.file("trees2.tsv"), "a\t(x (y z))\n");
  CHECK_THROWS_AS(load_corpus({dir.file("t.tsv"), "", "", dir.file("trees2.tsv")}, {true, false, false, true}), Error);
  // Boundaries past the features.
  fileio::write_file_atomic(dir.file("b2.tsv"), "a\t0\t0\t0.5\na\t1\t0.5\t1.5\n");
  CHECK_THROWS_AS(load_corpus({"", dir.file("f.spvf"), dir.file("b2.tsv"), ""}, {false, true, true, false}), Error);
  // Malformed line reports file and line.
  fileio::write_file_atomic(dir.file("bad.tsv"), "a\tx\nb\n");
  try {
    load_corpus({dir.file("bad.tsv"), "", "", ""}, {true, false, false, false});
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("bad.tsv") != std::string::npos);
  }
  CHECK_THROWS_AS(load_corpus({"", "", "", ""}, {}), Error);
}

TEST_CASE("config files") {
  ConfigFile f = ConfigFile::parse("# comment\nhidden_dim = 16\nname = abc  # trailing\n\nrate=0.5\n", "c.cfg");
  CHECK(f.get_int("hidden_dim") == 16);
  CHECK(f.get_string("name") == "abc");
  CHECK_FALSE(f.get_double("missing").has_value());
  CHECK_THROWS_AS(f.check_all_used(), FormatError);
  CHECK(f.get_double("rate") == 0.5);
  f.check_all_used();
  CHECK_THROWS_AS(ConfigFile::parse("a = 1\na = 2\n", "c"), FormatError);
  CHECK_THROWS_AS(ConfigFile::parse("a\n", "c"), FormatError);
  CHECK_THROWS_AS(ConfigFile::parse("a =\n", "c"), FormatError);
  ConfigFile g = ConfigFile::parse("n = 1.5\n", "c");
  CHECK_THROWS_AS(g.get_int("n"), FormatError);

  SynthGrammarConfig sc;
  ConfigFile h = ConfigFile::parse("direction = head-final\nbranching_p = 1\nseed = 9\n", "c");
  sc.load(h);
  h.check_all_used();
  CHECK(sc.direction == HeadDirection::kFinal);
  CHECK(sc.branching_p == 1.0);
  CHECK(sc.seed == 9);
  CHECK(sc.describe().find("direction = head-final\n") != std::string::npos);
  sc.branching_p = 1.5;
  CHECK_THROWS_AS(sc.validate(), Error);
  CHECK_THROWS_AS(parse_head_direction("sideways"), Error);
}

TEST_CASE("synthetic corpus trees") {
  SynthGrammarConfig c;
  c.branching_p = 1.0;
  for (const auto& u : synth_corpus(c, 5, 4, 4)) CHECK(spans(u.tree) == spans(parse_bracketed("(1 (2 (3 4)))")));
  c.direction = HeadDirection::kFinal;
  for (const auto& u : synth_corpus(c, 5, 4, 4)) CHECK(spans(u.tree) == spans(parse_bracketed("(((1 2) 3) 4)")));
  c.branching_p = 0.0;
  bool varied = false;
  for (const auto& u : synth_corpus(c, 30, 6, 6)) varied |= spans(u.tree) != spans(left_branching(6));
  CHECK(varied);
  CHECK_THROWS_AS(synth_corpus(c, 5, 0, 3), Error);
  CHECK_THROWS_AS(synth_corpus(c, 5, 4, 3), Error);
}

TEST_CASE("synthetic corpus structure") {
  SynthGrammarConfig c;
  c.feature_dim = 6;
  const auto corpus = synth_corpus(c, 40, 3, 8, 1, "train");
  CHECK(corpus.front().utterance_id == "train00000");
  for (const auto& u : corpus) {
    const int n = static_cast<int>(u.tokens.size());
    CHECK(n >= 3);
    CHECK(n <= 8);
    CHECK(static_cast<int>(u.boundaries.size()) == n);
    CHECK(u.tree.num_leaves() == n);
    CHECK(u.tree.tokens() == u.tokens);
    CHECK(u.tree.is_binary());
    CHECK(u.boundaries.segments.front().start == 0.0);
    for (std::size_t k = 1; k < u.boundaries.size(); ++k) {
      CHECK(u.boundaries.segments[k].start == u.boundaries.segments[k - 1].end);
    }
    CHECK(u.boundaries.segments.back().end == doctest::Approx(u.frames.duration()).epsilon(1e-12));
    for (const auto& s : u.boundaries.segments) {
      CHECK(s.duration() >= 0.2 - 1e-9);
      CHECK(s.duration() <= 0.7 + 1e-9);
    }
    for (const auto& t : u.tokens) CHECK(rank_of(t) < c.vocab_size);
    CHECK(u.frames.dim == 6);
  }

  // Reproducible, and independent streams differ.
  const auto again = synth_corpus(c, 40, 3, 8, 1, "train");
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    CHECK(again[k].frames == corpus[k].frames);
    CHECK(again[k].tokens == corpus[k].tokens);
    CHECK(again[k].boundaries == corpus[k].boundaries);
  }
  CHECK(synth_corpus(c, 40, 3, 8, 2, "train")[0].tokens != corpus[0].tokens);
  CHECK(synth_word_vector(c, 7) == synth_word_vector(c, 7));
  CHECK(synth_word_vector(c, 7) != synth_word_vector(c, 8));
  CHECK(synth_word(12) == "w12");
}

TEST_CASE("zero noise frames recover word vectors") {
  SynthGrammarConfig c;
  c.feature_dim = 5;
  c.noise_stdev = 0.0;
  nn::ParameterStore store;
  const nn::Mlp2 mlp = nn::add_mlp2(store, "segment", 5, 4, 1);
  Rng rng(3);
  for (auto& p : store.params()) nn::init_uniform(p, rng, 1.0);
  for (const auto& u : synth_corpus(c, 10, 3, 6)) {
    const auto ranges = frame_ranges(u.frames, u.boundaries);
    const auto embedded = embed_segments(u.frames, u.boundaries, store, mlp);
    for (std::size_t k = 0; k < u.tokens.size(); ++k) {
      const auto base = synth_word_vector(c, rank_of(u.tokens[k]));
      for (int t = ranges[k].first; t <= ranges[k].last; ++t) {
        const auto f = u.frames.frame(t);
        CHECK(std::vector<float>(f.begin(), f.end()) == base);
      }
      for (std::size_t d = 0; d < base.size(); ++d) CHECK(embedded[k][d] == doctest::Approx(base[d]).epsilon(1e-12));
    }
  }
}
