#include "speechparse/chart.h"

#include <cmath>
#include <string>

#include "speechparse/common.h"

namespace speechparse {

SpanChart::SpanChart(int n) : n_(n) {
  if (n < 1) throw Error("SpanChart: empty chart");
  cells_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
}

std::size_t SpanChart::index(int i, int j) const {
  if (i < 1 || j < i || j > n_) {
    throw Error("SpanChart: cell (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
  }
  return static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j - 1);
}

void SpanChart::set(int i, int j, double score) {
  if (!std::isfinite(score)) throw Error("SpanChart: non-finite score");
  cells_[index(i, j)] = score;
}

void SpanChart::shift(double c) {
  for (int i = 1; i <= n_; ++i) {
    for (int j = i; j <= n_; ++j) set(i, j, at(i, j) + c);
  }
}

namespace {

Tree build(const std::vector<int>& split, int n, int i, int j) {
  if (i == j) return Tree::leaf();
  const int k = split[static_cast<std::size_t>((i - 1) * n + (j - 1))];
  return Tree::join(build(split, n, i, k), build(split, n, k + 1, j));
}

void add_tree_cells(const SpanChart& chart, const TreeNode& node, double& total) {
  total += chart.at(node.span.i, node.span.j);
  for (const auto& child : node.children) add_tree_cells(chart, child, total);
}

}  // namespace

Decoded cky_decode(const SpanChart& chart) {
  const int n = chart.size();
  const auto idx = [n](int i, int j) { return static_cast<std::size_t>((i - 1) * n + (j - 1)); };
  std::vector<double> best(static_cast<std::size_t>(n * n), 0.0);
  std::vector<int> split(static_cast<std::size_t>(n * n), 0);
  for (int i = 1; i <= n; ++i) best[idx(i, i)] = chart.at(i, i);
  for (int width = 2; width <= n; ++width) {
    for (int i = 1; i + width - 1 <= n; ++i) {
      const int j = i + width - 1;
      int arg = j - 1;
      double top = best[idx(i, j - 1)] + best[idx(j, j)];
      for (int k = j - 2; k >= i; --k) {
        const double v = best[idx(i, k)] + best[idx(k + 1, j)];
        if (v > top) {
          top = v;
          arg = k;
        }
      }
      best[idx(i, j)] = top + chart.at(i, j);
      split[idx(i, j)] = arg;
    }
  }
  Tree tree = build(split, n, 1, n);
  const double score = tree_score(chart, tree);
  return {std::move(tree), score};
}

double tree_score(const SpanChart& chart, const Tree& tree) {
  if (tree.num_leaves() != chart.size()) {
    throw Error("tree_score: tree has " + std::to_string(tree.num_leaves()) + " leaves, chart has " +
                std::to_string(chart.size()));
  }
  if (!tree.is_binary()) throw Error("tree_score: tree is not binary");
  double total = 0.0;
  add_tree_cells(chart, tree.root(), total);
  return total;
}

std::vector<Tree> enumerate_binary_trees(int n) {
  if (n < 1) throw Error("enumerate_binary_trees: n must be positive");
  // by_width[w] holds every binary tree over w leaves.
  std::vector<std::vector<Tree>> by_width(static_cast<std::size_t>(n) + 1);
  by_width[1].push_back(Tree::leaf());
  for (int w = 2; w <= n; ++w) {
    for (int left = w - 1; left >= 1; --left) {
      for (const Tree& l : by_width[static_cast<std::size_t>(left)]) {
        for (const Tree& r : by_width[static_cast<std::size_t>(w - left)]) {
          by_width[static_cast<std::size_t>(w)].push_back(Tree::join(l, r));
        }
      }
    }
  }
  return std::move(by_width[static_cast<std::size_t>(n)]);
}

Decoded brute_force_best(const SpanChart& chart) {
  if (chart.size() > kBruteForceMaxLeaves) {
    throw Error("brute_force_best: n=" + std::to_string(chart.size()) + " exceeds " +
                std::to_string(kBruteForceMaxLeaves));
  }
  std::vector<Tree> trees = enumerate_binary_trees(chart.size());
  std::size_t arg = 0;
  double top = tree_score(chart, trees[0]);
  for (std::size_t t = 1; t < trees.size(); ++t) {
    const double v = tree_score(chart, trees[t]);
    if (v > top) {
      top = v;
      arg = t;
    }
  }
  return {std::move(trees[arg]), top};
}

}  // namespace speechparse
