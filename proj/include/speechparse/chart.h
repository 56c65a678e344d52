#pragma once

// Span-score chart and exact max-score binary decoding.

#include <utility>
#include <vector>

#include "speechparse/treebank.h"

namespace speechparse {

// Upper-triangular table of finite scores s(i, j), 1 <= i <= j <= n.
class SpanChart {
 public:
  explicit SpanChart(int n);

  int size() const { return n_; }
  double at(int i, int j) const { return cells_[index(i, j)]; }
  // Throws on out-of-range cells or non-finite scores.
  void set(int i, int j, double score);
  // Adds `c` to every cell.
  void shift(double c);

 private:
  std::size_t index(int i, int j) const;

  int n_;
  std::vector<double> cells_;
};

struct Decoded {
  Tree tree;
  double score = 0.0;
};

// Binary tree maximising the sum of cell scores over its spans, width-1
// cells included. Ties go to the split with the longest left part, so an
// all-zero chart decodes to the left-branching tree.
Decoded cky_decode(const SpanChart& chart);

// Sum of chart scores over every span of a binary tree plus all width-1
// cells, accumulated in pre-order.
double tree_score(const SpanChart& chart, const Tree& tree);

// Exhaustive search over all binary trees, for n <= kBruteForceMaxLeaves.
// Candidates are enumerated longest left part first so that the first
// maximum found matches cky_decode's tie-break.
inline constexpr int kBruteForceMaxLeaves = 12;
Decoded brute_force_best(const SpanChart& chart);

// All binary trees over n leaves, root split from the right end leftwards,
// then left subtree, then right subtree (Catalan(n-1) trees).
std::vector<Tree> enumerate_binary_trees(int n);

}  // namespace speechparse
