#pragma once

// Constituency trees over leaf positions 1..n, span extraction, bracketed
// text I/O and the rule-based branching baselines.

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace speechparse {

// Closed leaf interval [i, j], 1-based.
struct Span {
  int i = 1;
  int j = 1;

  int width() const { return j - i + 1; }
  auto operator<=>(const Span&) const = default;
};

struct TreeNode {
  // 1-based leaf index; 0 for internal nodes.
  int leaf = 0;
  std::string token;
  std::vector<TreeNode> children;
  Span span;

  bool is_leaf() const { return leaf > 0; }
  bool operator==(const TreeNode&) const = default;
};

// Immutable constituency tree. Internal nodes have >= 2 children; leaves
// are numbered 1..n left to right.
class Tree {
 public:
  // Validates the structure and recomputes leaf numbering and spans.
  explicit Tree(TreeNode root);

  static Tree leaf(std::string token = {});
  // Binary node over two subtrees; leaves of `right` are renumbered.
  static Tree join(const Tree& left, const Tree& right);

  const TreeNode& root() const { return root_; }
  int num_leaves() const { return root_.span.j; }
  bool is_binary() const;
  std::vector<std::string> tokens() const;

  bool operator==(const Tree&) const = default;

 private:
  TreeNode root_;
};

// Spans of every internal node (width >= 2), sorted. The whole-sentence
// span (1, n) is included when n >= 2; single-leaf trees yield nothing.
std::vector<Span> spans(const Tree& tree);

Tree right_branching(int n);
Tree left_branching(int n);

enum class BracketStyle {
  // Every bare token is a leaf: "(a (b c))".
  kUnlabeled,
  // Penn-style: the token right after "(" is a label and is ignored;
  // "(DT the)" collapses to the leaf "the".
  kLabeled,
};

// Throws ParseError with a 1-based character offset. Unary chains collapse
// to their lowest node.
Tree parse_bracketed(std::string_view text, BracketStyle style = BracketStyle::kUnlabeled);

// Leaves print their token, or their index when the token is empty.
std::string write_bracketed(const Tree& tree);

// `utterance_id<TAB>bracketed_tree` per line. Duplicate ids are rejected.
std::map<std::string, Tree> read_tree_file(const std::string& path,
                                           BracketStyle style = BracketStyle::kUnlabeled);
void write_tree_file(const std::string& path, const std::map<std::string, Tree>& trees);

}  // namespace speechparse
