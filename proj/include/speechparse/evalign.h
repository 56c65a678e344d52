#pragma once

// Segmentation-aware constituent F1: proposed segments are aligned one to
// one with oracle word spans by maximum total time overlap, and predicted
// spans are scored through that alignment.

#include <string>
#include <utility>
#include <vector>

#include "speechparse/segments.h"
#include "speechparse/treebank.h"

namespace speechparse {

// Seconds shared by two segments (0 when disjoint).
double overlap(const Segment& a, const Segment& b);

struct AlignmentResult {
  // mapping[p] = oracle index (0-based) of proposed segment p, or -1.
  std::vector<int> mapping;
  double total_overlap = 0.0;
};

// Maximum-weight bipartite matching on the overlap matrix (Hungarian
// method). Zero-overlap pairs are never matched. Among optimal matchings
// the lexicographically smallest mapping wins, comparing oracle indices in
// proposed order with "unmapped" ordered last.
AlignmentResult optimal_assignment(const SegmentSequence& oracle, const SegmentSequence& proposed);

// Maximum-weight assignment on a dense rows x cols weight matrix (negative
// weights are never chosen). Returns row -> column or -1, and the total.
std::pair<std::vector<int>, double> max_weight_assignment(const std::vector<std::vector<double>>& weights);

struct EvalItem {
  std::string utterance_id;
  Tree tree;
  SegmentSequence segments;
};

struct UtteranceCounts {
  std::string utterance_id;
  long matched = 0;
  long predicted = 0;
  long gold = 0;
};

struct F1Report {
  long matched = 0;
  long predicted = 0;
  long gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<UtteranceCounts> per_utterance;
};

struct F1Options {
  // When set, unmapped proposed segments inside a predicted span are
  // ignored instead of blocking the match.
  bool allow_unmapped = false;
};

// Pairs `gold` and `pred` by utterance id (both lists must hold exactly the
// same ids) and micro-averages counts over the corpus.
F1Report aligned_f1(const std::vector<EvalItem>& gold, const std::vector<EvalItem>& pred, const F1Options& options = {});

// Plain unlabeled span F1 on trees over the same leaves.
F1Report unlabeled_f1(const std::vector<std::pair<Tree, Tree>>& gold_pred);

struct BranchingScore {
  double right_fraction = 0.0;
  double left_fraction = 0.0;
};

// Per utterance, the share of predicted spans also found in the right- and
// left-branching trees of the same length, averaged over utterances.
// Single-leaf trees have no spans and are not counted.
BranchingScore branching_score(const std::vector<Tree>& trees);

// `metric<TAB>value` rows (percent, 2 decimals; counts as integers), then
// `utt_id<TAB>matched<TAB>pred<TAB>gold` rows.
std::string format_report_tsv(const F1Report& report);
std::string format_report_text(const F1Report& report);

struct SeedSummary {
  double mean = 0.0;
  double stdev = 0.0;
  std::size_t runs = 0;
};
// Sample standard deviation (n - 1); 0 for a single run.
SeedSummary summarize_runs(const std::vector<double>& values);
// Reads the f1 row back from a report TSV (percent).
double read_report_f1(const std::string& path);

}  // namespace speechparse
