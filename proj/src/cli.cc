#include "speechparse/cli.h"

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "speechparse/fileio.h"

namespace speechparse::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kModelFile = "model.spvc";
constexpr const char* kModelConfigFile = "model.cfg";
constexpr const char* kVocabFile = "vocab.txt";
constexpr const char* kTrainLogFile = "train_log.tsv";
constexpr const char* kSegmentsFile = "segments.tsv";
constexpr std::uint64_t kModelInitSalt = 0x696e6974ULL;

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void make_out_dir(const std::string& dir) {
  if (dir.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir + ": " + ec.message());
}

bool plain_leaf_token(const std::string& t) {
  return !t.empty() && t.find_first_of("() \t\r\n") == std::string::npos;
}

TreeNode label_node(const TreeNode& node, const std::vector<std::string>& tokens) {
  TreeNode out = node;
  if (out.is_leaf()) {
    out.token = tokens[static_cast<std::size_t>(out.leaf - 1)];
    return out;
  }
  for (auto& c : out.children) c = label_node(c, tokens);
  return out;
}

// Puts `tokens` on the leaves when every token is printable as a bare leaf.
Tree label_leaves(const Tree& tree, const std::vector<std::string>& tokens) {
  if (static_cast<int>(tokens.size()) != tree.num_leaves()) return tree;
  for (const auto& t : tokens) {
    if (!plain_leaf_token(t)) return tree;
  }
  return Tree(label_node(tree.root(), tokens));
}

// A corpus together with the model inputs built from it. Not movable once
// inputs exist, since they point into `corpus.features`.
struct ModelCorpus {
  Corpus corpus;
  std::vector<std::vector<std::string>> tokens;
  std::vector<SegmentSequence> segments;
  std::vector<ModelInput> inputs;

  ModelCorpus() = default;
  ModelCorpus(const ModelCorpus&) = delete;
  ModelCorpus& operator=(const ModelCorpus&) = delete;
};

std::unique_ptr<ModelCorpus> load_model_corpus(InputMode mode, const CorpusPaths& paths,
                                               const SegmentationSource& segmentation, const std::string& flag) {
  auto mc = std::make_unique<ModelCorpus>();
  CorpusSources sources = paths.resolve();
  CorpusRequirements req;
  if (mode == InputMode::kToken) {
    if (sources.transcripts.empty()) throw UsageError(flag + ": token mode needs a transcript file");
    if (segmentation.kind != SegmentationSource::Kind::kOracle) {
      throw UsageError("token mode has no time axis; --segmentation must be oracle");
    }
    req.tokens = true;
  } else {
    if (sources.features.empty()) throw UsageError(flag + ": direct mode needs a feature file");
    req.features = true;
    if (segmentation.kind == SegmentationSource::Kind::kOracle) {
      if (sources.boundaries.empty()) throw UsageError(flag + ": oracle segmentation needs a boundary file");
      req.boundaries = true;
    }
  }
  mc->corpus = load_corpus(sources, req);
  if (!mc->corpus.skipped.empty()) {
    std::cerr << flag << ": skipped " << mc->corpus.skipped.size() << " utterance(s) missing required fields\n";
  }
  std::map<std::string, SegmentSequence> from_file;
  if (segmentation.kind == SegmentationSource::Kind::kFile) from_file = read_boundary_file(segmentation.path);
  for (const auto& r : mc->corpus.records) {
    if (mode == InputMode::kToken) {
      mc->tokens.push_back(normalize_tokens(*r.tokens));
      if (mc->tokens.back().empty()) throw Error("utterance " + r.utterance_id + " has no tokens after normalization");
      if (r.boundaries) mc->segments.push_back(*r.boundaries);
      continue;
    }
    const FrameMatrix& frames = mc->corpus.frames(r);
    SegmentSequence segs;
    switch (segmentation.kind) {
      case SegmentationSource::Kind::kOracle:
        segs = *r.boundaries;
        break;
      case SegmentationSource::Kind::kFixed:
        segs = fixed_interval_segment(frames.duration(), segmentation.interval, r.utterance_id);
        break;
      case SegmentationSource::Kind::kFile: {
        const auto it = from_file.find(r.utterance_id);
        if (it == from_file.end()) {
          throw Error(segmentation.path + ": no segments for utterance " + r.utterance_id);
        }
        segs = it->second;
        break;
      }
    }
    mc->segments.push_back(std::move(segs));
    if (r.tokens) mc->tokens.push_back(*r.tokens);
  }
  return mc;
}

void build_inputs(ModelCorpus& mc, InputMode mode, const Vocabulary* vocab) {
  mc.inputs.clear();
  for (std::size_t k = 0; k < mc.corpus.records.size(); ++k) {
    ModelInput in;
    if (mode == InputMode::kToken) {
      in.token_ids = vocab->encode(mc.tokens[k]);
    } else {
      in.frames = &mc.corpus.frames(mc.corpus.records[k]);
      in.ranges = frame_ranges(*in.frames, mc.segments[k]);
    }
    mc.inputs.push_back(std::move(in));
  }
}

void add_corpus_inputs(Manifest& m, const std::string& name, const CorpusSources& s) {
  m.input(name + ".transcripts", s.transcripts);
  m.input(name + ".features", s.features);
  m.input(name + ".boundaries", s.boundaries);
  m.input(name + ".trees", s.trees);
}

std::uint64_t parse_seed(long long v) {
  if (v < 0) throw UsageError("seed must be non-negative");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

// ---- shared pieces -------------------------------------------------------

CorpusSources CorpusPaths::resolve() const {
  CorpusSources s;
  const auto pick = [&](const std::string& explicit_path, const char* standard) {
    if (!explicit_path.empty()) return explicit_path;
    if (dir.empty()) return std::string();
    const std::string p = join(dir, standard);
    return fs::exists(p) ? p : std::string();
  };
  if (!dir.empty() && !fs::is_directory(dir)) throw UsageError("not a corpus directory: " + dir);
  s.transcripts = pick(transcripts, kTranscriptsFile);
  s.features = pick(features, kFeaturesFile);
  s.boundaries = pick(boundaries, kBoundariesFile);
  s.trees = pick(trees, kTreesFile);
  return s;
}

SegmentationSource SegmentationSource::parse(const std::string& text) {
  SegmentationSource s;
  if (text == "oracle") return s;
  if (text.rfind("fixed:", 0) == 0) {
    s.kind = Kind::kFixed;
    if (!fileio::parse_double(text.substr(6), s.interval) || !(s.interval > 0.0)) {
      throw UsageError("--segmentation fixed:<seconds> needs a positive interval");
    }
    return s;
  }
  if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    s.kind = Kind::kFile;
    s.path = text.substr(5);
    return s;
  }
  throw UsageError("--segmentation must be oracle, fixed:<seconds> or file:<path>, got '" + text + "'");
}

std::string SegmentationSource::describe() const {
  switch (kind) {
    case Kind::kOracle:
      return "oracle";
    case Kind::kFixed:
      return "fixed:" + fileio::format_double(interval);
    case Kind::kFile:
      return "file:" + path;
  }
  return {};
}

Manifest::Manifest(std::string command) {
  set("command", std::move(command));
  set("artifact_version", kArtifactVersion);
}

void Manifest::set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

void Manifest::input(const std::string& name, const std::string& path) {
  if (path.empty()) return;
  set("input." + name, path);
  set("input." + name + ".sha256", fileio::sha256_file(path));
}

void Manifest::output(const std::string& name, const std::string& path) {
  set("output." + name, fs::path(path).filename().string());
  set("output." + name + ".sha256", fileio::sha256_file(path));
}

void Manifest::config_block(const std::string& prefix, const std::string& describe_text) {
  for (std::string_view line : fileio::split_lines(describe_text)) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    set(prefix + std::string(fileio::trim(line.substr(0, eq))), std::string(fileio::trim(line.substr(eq + 1))));
  }
}

std::string Manifest::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void Manifest::write(const std::string& dir) const { fileio::write_file_atomic(join(dir, "manifest.txt"), str()); }

std::string format_model_config(const ModelConfig& c) {
  std::string out;
  out += "mode = " + to_string(c.mode) + "\n";
  out += "hidden_dim = " + std::to_string(c.hidden_dim) + "\n";
  if (c.mode == InputMode::kToken) {
    out += "vocab_size = " + std::to_string(c.vocab_size) + "\n";
  } else {
    out += "feature_dim = " + std::to_string(c.feature_dim) + "\n";
    out += "segment_hidden = " + std::to_string(c.segment_hidden) + "\n";
  }
  out += "chart_score = " + to_string(c.chart_score) + "\n";
  return out;
}

ModelConfig parse_model_config(ConfigFile& file) {
  ModelConfig c;
  const auto mode = file.get_string("mode");
  if (!mode) throw Error("model config lacks mode");
  c.mode = parse_input_mode(*mode);
  if (auto v = file.get_int("hidden_dim")) c.hidden_dim = static_cast<int>(*v);
  if (auto v = file.get_int("vocab_size")) c.vocab_size = static_cast<int>(*v);
  if (auto v = file.get_int("feature_dim")) c.feature_dim = static_cast<int>(*v);
  if (auto v = file.get_int("segment_hidden")) c.segment_hidden = static_cast<int>(*v);
  if (auto v = file.get_string("chart_score")) c.chart_score = parse_chart_score(*v);
  file.check_all_used();
  return c;
}

// ---- train ---------------------------------------------------------------

TrainResult cmd_train(const TrainOptions& o) {
  if (o.train.dir.empty() && o.train.transcripts.empty() && o.train.features.empty()) {
    throw UsageError("--train is required");
  }
  if (o.valid.dir.empty()) throw UsageError("--valid is required: training selects the checkpoint on a validation set");
  make_out_dir(o.out_dir);

  TrainConfig tc = TrainConfig::defaults_for(o.mode);
  ModelConfig mc;
  mc.mode = o.mode;
  std::size_t top_k = kDefaultVocabSize;
  if (!o.config_path.empty()) {
    ConfigFile cfg = ConfigFile::read(o.config_path);
    if (auto v = cfg.get_int("hidden_dim")) mc.hidden_dim = static_cast<int>(*v);
    if (auto v = cfg.get_int("segment_hidden")) mc.segment_hidden = static_cast<int>(*v);
    if (auto v = cfg.get_string("chart_score")) mc.chart_score = parse_chart_score(*v);
    if (auto v = cfg.get_int("vocab_top_k")) {
      if (*v < 1) throw UsageError("vocab_top_k must be positive");
      top_k = static_cast<std::size_t>(*v);
    }
    if (auto v = cfg.get_int("batch_size")) tc.batch_size = static_cast<int>(*v);
    if (auto v = cfg.get_double("learning_rate")) tc.learning_rate = *v;
    if (auto v = cfg.get_int("max_epochs")) tc.max_epochs = static_cast<int>(*v);
    if (auto v = cfg.get_int("max_batches")) tc.max_batches = static_cast<int>(*v);
    if (auto v = cfg.get_int("negative_samples")) tc.negative_samples = static_cast<int>(*v);
    if (auto v = cfg.get_double("margin")) tc.margin = *v;
    if (auto v = cfg.get_int("validation_every")) tc.validation_every = static_cast<int>(*v);
    if (auto v = cfg.get_int("seed")) tc.seed = parse_seed(*v);
    cfg.check_all_used();
  }
  if (o.seed) tc.seed = *o.seed;
  tc.validate();

  auto train_set = load_model_corpus(o.mode, o.train, o.segmentation, "--train");
  auto valid_set = load_model_corpus(o.mode, o.valid, o.segmentation, "--valid");
  if (train_set->corpus.records.empty()) throw Error("--train: no usable utterances");
  if (valid_set->corpus.records.empty()) throw Error("--valid: no usable utterances");

  Vocabulary vocab;
  if (o.mode == InputMode::kToken) {
    vocab = build_vocab(train_set->tokens, top_k);
    mc.vocab_size = vocab.size();
  } else {
    mc.feature_dim = train_set->corpus.features.dim;
    if (valid_set->corpus.features.dim != mc.feature_dim) {
      throw Error("--valid: feature dimension differs from the training set");
    }
  }
  build_inputs(*train_set, o.mode, &vocab);
  build_inputs(*valid_set, o.mode, &vocab);

  DioraModel model = DioraModel::create(mc, tc.seed ^ kModelInitSalt);
  TrainResult result = train(model, train_set->inputs, valid_set->inputs, tc);
  if (!o.quiet) {
    for (const auto& e : result.log) {
      std::cerr << "step " << e.step << "  val_loss " << fileio::format_fixed(e.val_loss, 6) << "\n";
    }
    std::cerr << "best checkpoint at step " << result.best_step << " (val_loss "
              << fileio::format_fixed(result.best_val_loss, 6) << ")\n";
  }

  const std::string model_path = join(o.out_dir, kModelFile);
  nn::write_checkpoint(model_path, result.best);
  fileio::write_file_atomic(join(o.out_dir, kModelConfigFile), format_model_config(mc));
  if (o.mode == InputMode::kToken) write_vocab_file(join(o.out_dir, kVocabFile), vocab);
  fileio::write_file_atomic(join(o.out_dir, kTrainLogFile), format_train_log(result.log));

  Manifest m("train");
  m.set("seed", std::to_string(tc.seed));
  m.set("mode", to_string(o.mode));
  m.set("segmentation", o.segmentation.describe());
  m.config_block("model.", format_model_config(mc));
  m.config_block("train.", tc.describe());
  if (o.mode == InputMode::kToken) m.set("vocab_top_k", std::to_string(top_k));
  m.input("config", o.config_path);
  add_corpus_inputs(m, "train", o.train.resolve());
  add_corpus_inputs(m, "valid", o.valid.resolve());
  if (o.segmentation.kind == SegmentationSource::Kind::kFile) m.input("segmentation", o.segmentation.path);
  m.set("result.steps", std::to_string(result.steps));
  m.set("result.best_step", std::to_string(result.best_step));
  m.set("result.skipped_short", std::to_string(result.skipped_short));
  if (result.aborted) m.set("result.aborted", result.abort_reason);
  m.output("model", model_path);
  m.output("model_config", join(o.out_dir, kModelConfigFile));
  if (o.mode == InputMode::kToken) m.output("vocab", join(o.out_dir, kVocabFile));
  m.output("train_log", join(o.out_dir, kTrainLogFile));
  m.write(o.out_dir);
  if (result.aborted) throw nn::NumericError("training aborted: " + result.abort_reason);
  return result;
}

// ---- parse ---------------------------------------------------------------

void cmd_parse(const ParseOptions& o) {
  if (o.model_dir.empty()) throw UsageError("--model is required");
  make_out_dir(o.out_dir);
  ConfigFile cfg = ConfigFile::read(join(o.model_dir, kModelConfigFile));
  const ModelConfig mc = parse_model_config(cfg);
  const DioraModel model = DioraModel::from_parameters(mc, nn::read_checkpoint(join(o.model_dir, kModelFile)));
  Vocabulary vocab;
  if (mc.mode == InputMode::kToken) {
    vocab = read_vocab_file(join(o.model_dir, kVocabFile));
    if (vocab.size() != mc.vocab_size) throw Error("vocabulary size does not match the model");
  }

  const CorpusSources sources = o.corpus.resolve();
  if (mc.mode == InputMode::kToken && sources.transcripts.empty()) {
    throw Error("mode mismatch: token-mode model needs transcripts");
  }
  if (mc.mode == InputMode::kContinuous && sources.features.empty()) {
    throw Error("mode mismatch: direct-mode model needs features");
  }
  auto corpus = load_model_corpus(mc.mode, o.corpus, o.segmentation, "--corpus");
  if (mc.mode == InputMode::kContinuous && corpus->corpus.features.dim != mc.feature_dim) {
    throw Error("mode mismatch: model expects " + std::to_string(mc.feature_dim) + "-dim features, corpus has " +
                std::to_string(corpus->corpus.features.dim));
  }
  build_inputs(*corpus, mc.mode, &vocab);

  std::map<std::string, Tree> trees;
  std::map<std::string, SegmentSequence> segments;
  for (std::size_t k = 0; k < corpus->inputs.size(); ++k) {
    const std::string& id = corpus->corpus.records[k].utterance_id;
    Tree tree = parse(model, corpus->inputs[k]);
    if (mc.mode == InputMode::kToken) {
      tree = label_leaves(tree, corpus->tokens[k]);
    } else if (corpus->segments[k].words.size() == corpus->segments[k].size()) {
      tree = label_leaves(tree, corpus->segments[k].words);
    }
    trees.emplace(id, std::move(tree));
    if (k < corpus->segments.size()) segments.emplace(id, corpus->segments[k]);
  }
  const std::string trees_path = join(o.out_dir, kTreesFile);
  const std::string segs_path = join(o.out_dir, kSegmentsFile);
  write_tree_file(trees_path, trees);
  if (!segments.empty()) write_boundary_file(segs_path, segments);

  Manifest m("parse");
  m.set("segmentation", o.segmentation.describe());
  m.config_block("model.", format_model_config(mc));
  m.input("model", join(o.model_dir, kModelFile));
  m.input("model_config", join(o.model_dir, kModelConfigFile));
  if (mc.mode == InputMode::kToken) m.input("vocab", join(o.model_dir, kVocabFile));
  add_corpus_inputs(m, "corpus", sources);
  if (o.segmentation.kind == SegmentationSource::Kind::kFile) m.input("segmentation", o.segmentation.path);
  m.set("utterances", std::to_string(trees.size()));
  m.output("trees", trees_path);
  if (!segments.empty()) m.output("segments", segs_path);
  m.write(o.out_dir);
}

// ---- eval ----------------------------------------------------------------

namespace {

SegmentSequence unit_segments(const std::string& id, int n) {
  SegmentSequence s;
  s.utterance_id = id;
  for (int k = 0; k < n; ++k) s.segments.push_back({static_cast<double>(k), static_cast<double>(k + 1)});
  return s;
}

std::vector<EvalItem> pred_items(const std::string& trees_path, const std::string& segs_path) {
  const auto trees = read_tree_file(trees_path);
  std::map<std::string, SegmentSequence> segs;
  if (!segs_path.empty()) segs = read_boundary_file(segs_path);
  std::vector<EvalItem> items;
  for (const auto& [id, tree] : trees) {
    EvalItem item{id, tree, {}};
    if (segs_path.empty()) {
      item.segments = unit_segments(id, tree.num_leaves());
    } else {
      const auto it = segs.find(id);
      if (it == segs.end()) throw Error(segs_path + ": no segments for utterance " + id);
      item.segments = it->second;
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace

std::vector<F1Report> cmd_eval(const EvalOptions& o) {
  if (o.pred.empty()) throw UsageError("--pred is required");
  make_out_dir(o.out_dir);
  const CorpusSources gold_sources = o.gold.resolve();
  if (gold_sources.trees.empty()) throw UsageError("gold trees are required (--gold or --trees)");
  CorpusSources tree_sources;
  tree_sources.trees = gold_sources.trees;
  tree_sources.boundaries = gold_sources.boundaries;
  const bool gold_timed = !gold_sources.boundaries.empty();
  const Corpus gold = load_corpus(tree_sources, {false, false, gold_timed, true});
  if (!gold.skipped.empty()) {
    std::cerr << "gold: skipped " << gold.skipped.size() << " utterance(s) without boundaries\n";
  }
  std::vector<EvalItem> gold_items;
  for (const auto& r : gold.records) {
    gold_items.push_back({r.utterance_id, *r.tree,
                          gold_timed ? *r.boundaries : unit_segments(r.utterance_id, r.tree->num_leaves())});
  }

  // Resolve each run to (trees, segments).
  std::vector<std::pair<std::string, std::string>> runs;
  std::size_t next_seg = 0;
  for (const auto& p : o.pred) {
    if (fs::is_directory(p)) {
      const std::string segs = join(p, kSegmentsFile);
      runs.emplace_back(join(p, kTreesFile), fs::exists(segs) ? segs : std::string());
    } else {
      runs.emplace_back(p, next_seg < o.pred_segments.size() ? o.pred_segments[next_seg++] : std::string());
    }
  }
  if (next_seg != o.pred_segments.size()) throw UsageError("more --pred-segments than plain --pred files");

  Manifest m("eval");
  m.set("allow_unmapped", o.allow_unmapped ? "true" : "false");
  m.input("gold.trees", gold_sources.trees);
  m.input("gold.boundaries", gold_sources.boundaries);

  std::vector<F1Report> reports;
  std::vector<double> f1s;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& [trees_path, segs_path] = runs[k];
    if (gold_timed != !segs_path.empty()) {
      throw UsageError("gold and predictions must both carry segments or both lack them (run " +
                       std::to_string(k + 1) + ")");
    }
    const F1Report report = aligned_f1(gold_items, pred_items(trees_path, segs_path), {o.allow_unmapped});
    const std::string suffix = runs.size() == 1 ? std::string() : "." + std::to_string(k + 1);
    const std::string tsv = join(o.out_dir, "report" + suffix + ".tsv");
    const std::string txt = join(o.out_dir, "report" + suffix + ".txt");
    fileio::write_file_atomic(tsv, format_report_tsv(report));
    fileio::write_file_atomic(txt, format_report_text(report));
    const std::string run = "run" + suffix;
    m.input(run + ".trees", trees_path);
    m.input(run + ".segments", segs_path);
    m.output("report" + suffix, tsv);
    reports.push_back(report);
    f1s.push_back(100.0 * report.f1);
    if (runs.size() == 1) std::cout << format_report_text(report);
  }
  if (runs.size() > 1) {
    const SeedSummary s = summarize_runs(f1s);
    std::string out = "runs\t" + std::to_string(s.runs) + "\n";
    out += "f1_mean\t" + fileio::format_fixed(s.mean, 2) + "\n";
    out += "f1_stdev\t" + fileio::format_fixed(s.stdev, 2) + "\n";
    for (std::size_t k = 0; k < f1s.size(); ++k) {
      out += "f1." + std::to_string(k + 1) + "\t" + fileio::format_fixed(f1s[k], 2) + "\n";
    }
    const std::string path = join(o.out_dir, "summary.tsv");
    fileio::write_file_atomic(path, out);
    m.output("summary", path);
    std::cout << "F1 " << fileio::format_fixed(s.mean, 2) << " ± " << fileio::format_fixed(s.stdev, 2) << " over "
              << s.runs << " runs\n";
  }
  m.write(o.out_dir);
  return reports;
}

// ---- baseline ------------------------------------------------------------

void cmd_baseline(const BaselineOptions& o) {
  if (o.direction != "left" && o.direction != "right") throw UsageError("--direction must be left or right");
  make_out_dir(o.out_dir);
  const CorpusSources sources = o.gold.resolve();
  CorpusSources counted;
  counted.trees = sources.trees;
  counted.boundaries = sources.boundaries;
  counted.transcripts = sources.transcripts;
  const Corpus corpus = load_corpus(counted, {});
  std::map<std::string, Tree> trees;
  std::map<std::string, SegmentSequence> segments;
  for (const auto& r : corpus.records) {
    int n = 0;
    std::vector<std::string> tokens;
    if (r.tree) {
      n = r.tree->num_leaves();
      tokens = r.tree->tokens();
    } else if (r.boundaries) {
      n = static_cast<int>(r.boundaries->size());
      tokens = r.boundaries->words;
    } else {
      n = static_cast<int>(r.tokens->size());
      tokens = *r.tokens;
    }
    const Tree t = o.direction == "right" ? right_branching(n) : left_branching(n);
    trees.emplace(r.utterance_id, label_leaves(t, tokens));
    if (r.boundaries) segments.emplace(r.utterance_id, *r.boundaries);
  }
  const std::string trees_path = join(o.out_dir, kTreesFile);
  write_tree_file(trees_path, trees);
  Manifest m("baseline");
  m.set("direction", o.direction);
  add_corpus_inputs(m, "gold", counted);
  m.output("trees", trees_path);
  if (!segments.empty()) {
    const std::string segs_path = join(o.out_dir, kSegmentsFile);
    write_boundary_file(segs_path, segments);
    m.output("segments", segs_path);
  }
  m.write(o.out_dir);
}

// ---- synth ---------------------------------------------------------------

void cmd_synth(const SynthOptions& o) {
  if (o.config_path.empty()) throw UsageError("--config is required");
  ConfigFile cfg = ConfigFile::read(o.config_path);
  SynthGrammarConfig g;
  g.load(cfg);
  const auto num = [&](const char* key, long long fallback) {
    const long long v = cfg.get_int(key).value_or(fallback);
    if (v < 1) throw UsageError(std::string(key) + " must be positive");
    return static_cast<int>(v);
  };
  const int num_train = num("num_train", 2000);
  const int num_valid = num("num_valid", 200);
  const int num_test = num("num_test", 200);
  const int min_length = num("min_length", 3);
  const int max_length = num("max_length", 8);
  cfg.check_all_used();
  if (o.seed) g.seed = *o.seed;
  g.validate();
  make_out_dir(o.out_dir);

  Manifest m("synth");
  m.set("seed", std::to_string(g.seed));
  m.config_block("grammar.", g.describe());
  m.set("num_train", std::to_string(num_train));
  m.set("num_valid", std::to_string(num_valid));
  m.set("num_test", std::to_string(num_test));
  m.set("min_length", std::to_string(min_length));
  m.set("max_length", std::to_string(max_length));
  m.input("config", o.config_path);

  const std::vector<std::pair<std::string, int>> splits = {{"train", num_train}, {"valid", num_valid}, {"test", num_test}};
  std::uint64_t stream = 1;
  for (const auto& [name, count] : splits) {
    const auto utts = synth_corpus(g, count, min_length, max_length, stream++, name);
    const std::string dir = join(o.out_dir, name);
    make_out_dir(dir);
    TranscriptMap transcripts;
    FeatureSet features;
    features.dim = g.feature_dim;
    features.frame_shift = g.frame_shift;
    std::map<std::string, SegmentSequence> boundaries;
    std::map<std::string, Tree> trees;
    for (const auto& u : utts) {
      transcripts.emplace(u.utterance_id, u.tokens);
      features.utterances.emplace_back(u.utterance_id, u.frames);
      boundaries.emplace(u.utterance_id, u.boundaries);
      trees.emplace(u.utterance_id, u.tree);
    }
    write_transcript_file(join(dir, kTranscriptsFile), transcripts);
    write_feature_file(join(dir, kFeaturesFile), features);
    write_boundary_file(join(dir, kBoundariesFile), boundaries);
    write_tree_file(join(dir, kTreesFile), trees);
    for (const char* file : {kTranscriptsFile, kFeaturesFile, kBoundariesFile, kTreesFile}) {
      m.output(name + "." + fs::path(file).stem().string(), join(dir, file));
    }
  }
  m.write(o.out_dir);
}

}  // namespace speechparse::cli
