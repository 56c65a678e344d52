#include <CLI11.hpp>

#include <iostream>

#include "speechparse/cli.h"

namespace speechparse::cli {

namespace {

void add_corpus_flags(CLI::App* cmd, CorpusPaths& paths, const std::string& dir_flag, const std::string& dir_help) {
  cmd->add_option(dir_flag, paths.dir, dir_help);
  cmd->add_option("--transcripts", paths.transcripts, "transcript file (utt<TAB>tokens)");
  cmd->add_option("--features", paths.features, "binary feature file");
  cmd->add_option("--boundaries", paths.boundaries, "word boundary TSV");
  cmd->add_option("--trees", paths.trees, "bracketed tree file (utt<TAB>tree)");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Unsupervised constituency parsing of speech and transcripts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);

  TrainOptions train;
  std::string train_mode = "token";
  std::string train_seg = "oracle";
  long long train_seed = -1;
  auto* train_cmd = app.add_subcommand("train", "train a model and keep the best validation checkpoint");
  train_cmd->add_option("--mode", train_mode, "token | direct")->check(CLI::IsMember({"token", "direct"}));
  train_cmd->add_option("--train", train.train.dir, "training corpus directory")->required();
  train_cmd->add_option("--valid", train.valid.dir, "validation corpus directory")->required();
  train_cmd->add_option("--config", train.config_path, "key = value training config");
  train_cmd->add_option("--segmentation", train_seg, "oracle | fixed:<sec> | file:<path>");
  train_cmd->add_option("--seed", train_seed, "random seed (overrides the config)");
  train_cmd->add_option("--out", train.out_dir, "output directory")->required();
  train_cmd->add_flag("--quiet", train.quiet, "no progress output");

  ParseOptions parse;
  std::string parse_seg = "oracle";
  auto* parse_cmd = app.add_subcommand("parse", "parse a corpus with a trained model");
  parse_cmd->add_option("--model", parse.model_dir, "directory written by `train`")->required();
  add_corpus_flags(parse_cmd, parse.corpus, "--corpus", "corpus directory");
  parse_cmd->add_option("--segmentation", parse_seg, "oracle | fixed:<sec> | file:<path>");
  parse_cmd->add_option("--out", parse.out_dir, "output directory")->required();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "segmentation-aware constituent F1");
  add_corpus_flags(eval_cmd, eval.gold, "--gold", "gold corpus directory");
  eval_cmd->add_option("--pred", eval.pred, "parse output directory or tree file; repeat for several runs")
      ->required();
  eval_cmd->add_option("--pred-segments", eval.pred_segments, "segments for each plain --pred tree file");
  eval_cmd->add_flag("--allow-unmapped", eval.allow_unmapped, "ignore unmapped segments inside predicted spans");
  eval_cmd->add_option("--out", eval.out_dir, "output directory")->required();

  BaselineOptions baseline;
  auto* baseline_cmd = app.add_subcommand("baseline", "left- or right-branching trees over the gold leaves");
  baseline_cmd->add_option("--direction", baseline.direction, "left | right")->check(CLI::IsMember({"left", "right"}));
  add_corpus_flags(baseline_cmd, baseline.gold, "--gold", "gold corpus directory");
  baseline_cmd->add_option("--out", baseline.out_dir, "output directory")->required();

  SynthOptions synth;
  long long synth_seed = -1;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--config", synth.config_path, "key = value grammar config")->required();
  synth_cmd->add_option("--seed", synth_seed, "random seed (overrides the config)");
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) {
      train.mode = parse_input_mode(train_mode);
      train.segmentation = SegmentationSource::parse(train_seg);
      if (train_seed >= 0) train.seed = static_cast<std::uint64_t>(train_seed);
      cmd_train(train);
    } else if (*parse_cmd) {
      parse.segmentation = SegmentationSource::parse(parse_seg);
      cmd_parse(parse);
    } else if (*eval_cmd) {
      cmd_eval(eval);
    } else if (*baseline_cmd) {
      cmd_baseline(baseline);
    } else if (*synth_cmd) {
      if (synth_seed >= 0) synth.seed = static_cast<std::uint64_t>(synth_seed);
      cmd_synth(synth);
    }
  } catch (const nn::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace speechparse::cli
