#include <doctest.h>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "speechparse/cli.h"
#include "speechparse/fileio.h"

using namespace speechparse;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "speechparse");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  CliRun r;
  r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string read(const std::string& path) { return fileio::read_file(path); }

// Small synthetic corpus in <dir>/corpus/{train,valid,test}.
void make_synth(const TempDir& dir, const std::string& extra = "") {
  fileio::write_file_atomic(dir / "synth.cfg",
                            "num_train = 24\nnum_valid = 6\nnum_test = 6\nfeature_dim = 6\nmin_length = 2\n"
                            "max_length = 5\n" +
                                extra);
  const auto r = run({"synth", "--config", dir / "synth.cfg", "--seed", "4", "--out", dir / "corpus"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  const TempDir dir("speechparse_cli_usage");
  make_synth(dir);
  auto r = run({"train", "--mode", "direct", "--train", dir / "corpus/train", "--out", dir / "m"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--valid") != std::string::npos);

  r = run({"train", "--mode", "sideways", "--train", dir / "corpus/train", "--valid", dir / "corpus/valid", "--out",
           dir / "m"});
  CHECK(r.code == 2);
  r = run({"parse", "--model", dir / "nothing", "--corpus", dir / "corpus/test", "--out", dir / "p"});
  CHECK(r.code == 2);
  r = run({"frobnicate"});
  CHECK(r.code == 2);
  r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("synth") != std::string::npos);

  fileio::write_file_atomic(dir / "bad.cfg", "hidden_dim = 8\nhiden_dim = 9\n");
  r = run({"train", "--mode", "direct", "--train", dir / "corpus/train", "--valid", dir / "corpus/valid", "--config",
           dir / "bad.cfg", "--out", dir / "m"});
  CHECK(r.code == 2);
  CHECK(r.err.find("hiden_dim") != std::string::npos);

  fileio::write_file_atomic(dir / "zero.cfg", "num_train = 0\n");
  r = run({"synth", "--config", dir / "zero.cfg", "--out", dir / "z"});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(dir / "z/train/features.spvf"));
}

TEST_CASE("segmentation source flags") {
  CHECK(cli::SegmentationSource::parse("oracle").kind == cli::SegmentationSource::Kind::kOracle);
  const auto f = cli::SegmentationSource::parse("fixed:0.25");
  CHECK(f.kind == cli::SegmentationSource::Kind::kFixed);
  CHECK(f.interval == 0.25);
  CHECK(cli::SegmentationSource::parse("file:/x/y.tsv").path == "/x/y.tsv");
  CHECK(f.describe() == "fixed:0.25");
  CHECK_THROWS_AS(cli::SegmentationSource::parse("fixed:"), cli::UsageError);
  CHECK_THROWS_AS(cli::SegmentationSource::parse("fixed:-1"), cli::UsageError);
  CHECK_THROWS_AS(cli::SegmentationSource::parse("whatever"), cli::UsageError);
}

TEST_CASE("synth output") {
  const TempDir dir("speechparse_cli_synth");
  make_synth(dir, "direction = head-final\n");
  for (const char* split : {"train", "valid", "test"}) {
    for (const char* file : {"transcripts.tsv", "features.spvf", "boundaries.tsv", "trees.tsv"}) {
      CHECK(fs::exists(dir.path / "corpus" / split / file));
    }
  }
  CHECK(fs::exists(dir.path / "corpus/manifest.txt"));
  const auto r = run({"synth", "--config", dir / "synth.cfg", "--seed", "4", "--out", dir / "again"});
  REQUIRE(r.code == 0);
  for (const char* file : {"train/transcripts.tsv", "train/features.spvf", "valid/boundaries.tsv", "test/trees.tsv",
                           "manifest.txt"}) {
    CHECK(read(dir / (std::string("corpus/") + file)) == read(dir / (std::string("again/") + file)));
  }
  // Head-final gold trees lean left.
  long left = 0, right = 0;
  for (const auto& [id, t] : read_tree_file(dir / "corpus/train/trees.tsv")) {
    const auto s = spans(t);
    const auto l = spans(left_branching(t.num_leaves()));
    const auto rb = spans(right_branching(t.num_leaves()));
    for (const Span& x : s) {
      if (x.i == 1 && x.j == t.num_leaves()) continue;
      left += std::binary_search(l.begin(), l.end(), x);
      right += std::binary_search(rb.begin(), rb.end(), x);
    }
  }
  CHECK(left > 2 * right);
  CHECK(read(dir / "corpus/manifest.txt").find("grammar.direction = head-final") != std::string::npos);
}

TEST_CASE("baselines") {
  const TempDir dir("speechparse_cli_baseline");
  make_synth(dir, "branching_p = 1\n");
  auto r = run({"baseline", "--direction", "right", "--gold", dir / "corpus/test", "--out", dir / "right"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  r = run({"baseline", "--direction", "left", "--gold", dir / "corpus/test", "--out", dir / "left"});
  REQUIRE(r.code == 0);
  r = run({"eval", "--gold", dir / "corpus/test", "--pred", dir / "right", "--out", dir / "eval_right"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read(dir / "eval_right/report.tsv").find("f1\t100.00\n") != std::string::npos);
  r = run({"eval", "--gold", dir / "corpus/test", "--pred", dir / "left", "--out", dir / "eval_left"});
  REQUIRE(r.code == 0);
  CHECK(read_report_f1(dir / "eval_left/report.tsv") < 100.0);
  CHECK(run({"baseline", "--direction", "up", "--gold", dir / "corpus/test", "--out", dir / "x"}).code == 2);

  // Two runs: per-run reports plus a summary line.
  r = run({"eval", "--gold", dir / "corpus/test", "--pred", dir / "right", "--pred", dir / "left", "--out",
           dir / "eval_both"});
  REQUIRE(r.code == 0);
  const double a = read_report_f1(dir / "eval_both/report.1.tsv");
  const double b = read_report_f1(dir / "eval_both/report.2.tsv");
  CHECK(a == 100.0);
  const auto s = summarize_runs({a, b});
  CHECK(r.out.find("F1 " + fileio::format_fixed(s.mean, 2) + " ± " + fileio::format_fixed(s.stdev, 2) + " over 2 runs") !=
        std::string::npos);
  CHECK(read(dir / "eval_both/summary.tsv").find("runs\t2\n") != std::string::npos);
}

TEST_CASE("train, parse and evaluate in direct mode") {
  const TempDir dir("speechparse_cli_direct");
  make_synth(dir);
  fileio::write_file_atomic(dir / "train.cfg",
                            "hidden_dim = 8\nsegment_hidden = 8\nmax_batches = 6\nbatch_size = 4\nvalidation_every = 3\n"
                            "negative_samples = 3\n");
  auto r = run({"train", "--mode", "direct", "--train", dir / "corpus/train", "--valid", dir / "corpus/valid", "--config",
                dir / "train.cfg", "--seed", "7", "--out", dir / "model", "--quiet"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* file : {"model.spvc", "model.cfg", "train_log.tsv", "manifest.txt"}) CHECK(fs::exists(dir.path / "model" / file));
  CHECK_FALSE(fs::exists(dir.path / "model/vocab.txt"));
  const std::string manifest = read(dir / "model/manifest.txt");
  CHECK(manifest.find("train.seed = 7") != std::string::npos);
  CHECK(manifest.find("artifact_version = 1.0.0") != std::string::npos);

  r = run({"parse", "--model", dir / "model", "--corpus", dir / "corpus/test", "--out", dir / "oracle"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  r = run({"parse", "--model", dir / "model", "--corpus", dir / "corpus/test", "--segmentation", "fixed:0.5", "--out",
           dir / "fixed"});
  REQUIRE_MESSAGE(r.code == 0, r.err);

  const auto gold_bounds = read_boundary_file(dir / "corpus/test/boundaries.tsv");
  const auto oracle_trees = read_tree_file(dir / "oracle/trees.tsv");
  const auto fixed_trees = read_tree_file(dir / "fixed/trees.tsv");
  const auto fixed_segs = read_boundary_file(dir / "fixed/segments.tsv");
  bool differs = false;
  for (const auto& [id, segs] : gold_bounds) {
    CHECK(oracle_trees.at(id).num_leaves() == static_cast<int>(segs.size()));
    const double duration = segs.segments.back().end;
    CHECK(fixed_trees.at(id).num_leaves() == static_cast<int>(fixed_interval_segment(duration).size()));
    CHECK(fixed_trees.at(id).num_leaves() == static_cast<int>(fixed_segs.at(id).size()));
    differs |= fixed_trees.at(id).num_leaves() != oracle_trees.at(id).num_leaves();
  }
  CHECK(differs);

  // The CLI report equals the library metric on the same files.
  r = run({"eval", "--gold", dir / "corpus/test", "--pred", dir / "oracle", "--out", dir / "eval"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::vector<EvalItem> gold, pred;
  const auto gold_trees = read_tree_file(dir / "corpus/test/trees.tsv");
  const auto oracle_segs = read_boundary_file(dir / "oracle/segments.tsv");
  for (const auto& [id, t] : gold_trees) {
    gold.push_back({id, t, gold_bounds.at(id)});
    pred.push_back({id, oracle_trees.at(id), oracle_segs.at(id)});
  }
  CHECK(read(dir / "eval/report.tsv") == format_report_tsv(aligned_f1(gold, pred)));

  // Rerun is byte-identical.
  r = run({"train", "--mode", "direct", "--train", dir / "corpus/train", "--valid", dir / "corpus/valid", "--config",
           dir / "train.cfg", "--seed", "7", "--out", dir / "model2", "--quiet"});
  REQUIRE(r.code == 0);
  CHECK(read(dir / "model/model.spvc") == read(dir / "model2/model.spvc"));
  CHECK(read(dir / "model/train_log.tsv") == read(dir / "model2/train_log.tsv"));
  CHECK(read(dir / "model/manifest.txt") == read(dir / "model2/manifest.txt"));

  // A direct model cannot parse a transcripts-only corpus.
  fs::create_directories(dir.path / "text_only");
  fs::copy_file(dir.path / "corpus/test/transcripts.tsv", dir.path / "text_only/transcripts.tsv");
  r = run({"parse", "--model", dir / "model", "--corpus", dir / "text_only", "--out", dir / "bad"});
  CHECK(r.code == 2);
}

TEST_CASE("token mode") {
  const TempDir dir("speechparse_cli_token");
  make_synth(dir);
  fileio::write_file_atomic(dir / "train.cfg", "hidden_dim = 8\nmax_epochs = 1\nbatch_size = 8\nvalidation_every = 2\n");
  auto r = run({"train", "--mode", "token", "--train", dir / "corpus/train", "--valid", dir / "corpus/valid", "--config",
                dir / "train.cfg", "--out", dir / "model", "--quiet"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const Vocabulary v = read_vocab_file(dir / "model/vocab.txt");
  CHECK(v.token(0) == "<pad>");
  r = run({"parse", "--model", dir / "model", "--corpus", dir / "corpus/test", "--out", dir / "parsed"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto transcripts = read_transcript_file(dir / "corpus/test/transcripts.tsv");
  for (const auto& [id, t] : read_tree_file(dir / "parsed/trees.tsv")) CHECK(t.tokens() == transcripts.at(id));
  r = run({"parse", "--model", dir / "model", "--corpus", dir / "corpus/test", "--segmentation", "fixed:0.5", "--out",
           dir / "bad"});
  CHECK(r.code == 2);
}

TEST_CASE("fixed segmentation of a one-second utterance") {
  const TempDir dir("speechparse_cli_fixed");
  make_synth(dir);
  // Replace the test corpus with a single 1.0 s utterance of two words.
  fs::create_directories(dir.path / "one");
  FeatureSet set;
  set.dim = 6;
  FrameMatrix m(50, 6, 0.02);
  Rng rng(1);
  for (float& x : m.data) x = static_cast<float>(rng.normal());
  set.utterances.push_back({"solo", m});
  write_feature_file(dir / "one/features.spvf", set);
  fileio::write_file_atomic(dir / "one/boundaries.tsv", "solo\t0\t0.000\t0.300\nsolo\t1\t0.300\t0.600\nsolo\t2\t0.600\t1.000\n");
  fileio::write_file_atomic(dir / "train.cfg", "hidden_dim = 4\nsegment_hidden = 4\nmax_batches = 1\nvalidation_every = 1\n");
  auto r = run({"train", "--mode", "direct", "--train", dir / "corpus/train", "--valid", dir / "corpus/valid", "--config",
                dir / "train.cfg", "--out", dir / "model", "--quiet"});
  REQUIRE(r.code == 0);
  r = run({"parse", "--model", dir / "model", "--corpus", dir / "one", "--segmentation", "fixed:0.5", "--out",
           dir / "parsed"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto trees = read_tree_file(dir / "parsed/trees.tsv");
  CHECK(trees.at("solo").num_leaves() == 2);
  r = run({"parse", "--model", dir / "model", "--corpus", dir / "one", "--out", dir / "parsed_oracle"});
  REQUIRE(r.code == 0);
  CHECK(read_tree_file(dir / "parsed_oracle/trees.tsv").at("solo").num_leaves() == 3);
}
