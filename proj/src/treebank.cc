#include "speechparse/treebank.h"

#include <algorithm>
#include <cctype>
#include <functional>

#include "speechparse/common.h"
#include "speechparse/fileio.h"

namespace speechparse {

namespace {

void number_leaves(TreeNode& node, int& next_leaf) {
  if (node.children.empty()) {
    node.leaf = ++next_leaf;
    node.span = {node.leaf, node.leaf};
    return;
  }
  if (node.children.size() < 2) throw Error("internal tree node has fewer than 2 children");
  node.leaf = 0;
  for (auto& child : node.children) number_leaves(child, next_leaf);
  node.span = {node.children.front().span.i, node.children.back().span.j};
}

bool all_binary(const TreeNode& node) {
  if (node.is_leaf()) return true;
  if (node.children.size() != 2) return false;
  return all_binary(node.children[0]) && all_binary(node.children[1]);
}

void collect_spans(const TreeNode& node, std::vector<Span>& out) {
  if (node.is_leaf()) return;
  out.push_back(node.span);
  for (const auto& child : node.children) collect_spans(child, out);
}

void collect_tokens(const TreeNode& node, std::vector<std::string>& out) {
  if (node.is_leaf()) {
    out.push_back(node.token);
    return;
  }
  for (const auto& child : node.children) collect_tokens(child, out);
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class BracketParser {
 public:
  BracketParser(std::string_view text, BracketStyle style) : text_(text), style_(style) {}

  TreeNode parse() {
    skip_space();
    if (at_end()) fail("empty input");
    if (text_[pos_] != '(') fail("expected '('");
    TreeNode root = parse_group();
    skip_space();
    if (!at_end()) fail("trailing characters after tree");
    return root;
  }

 private:
  TreeNode parse_group() {
    ++pos_;  // '('
    std::vector<TreeNode> items;
    bool need_label = style_ == BracketStyle::kLabeled;
    while (true) {
      skip_space();
      if (at_end()) fail("unbalanced parentheses");
      const char c = text_[pos_];
      if (c == ')') break;
      if (c == '(') {
        need_label = false;  // unlabeled bracket inside a labeled tree
        items.push_back(parse_group());
        continue;
      }
      std::string token = read_token();
      if (need_label) {
        need_label = false;
        continue;
      }
      TreeNode leaf;
      leaf.token = std::move(token);
      items.push_back(std::move(leaf));
    }
    if (items.empty()) fail("empty node");
    ++pos_;  // ')'
    if (items.size() == 1) return std::move(items.front());
    TreeNode node;
    node.children = std::move(items);
    return node;
  }

  std::string read_token() {
    const std::size_t start = pos_;
    while (!at_end() && !is_space(text_[pos_]) && text_[pos_] != '(' && text_[pos_] != ')') ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (!at_end() && is_space(text_[pos_])) ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_ + 1); }

  std::string_view text_;
  BracketStyle style_;
  std::size_t pos_ = 0;
};

void write_node(const TreeNode& node, std::string& out) {
  if (node.is_leaf()) {
    out += node.token.empty() ? std::to_string(node.leaf) : node.token;
    return;
  }
  out.push_back('(');
  for (std::size_t c = 0; c < node.children.size(); ++c) {
    if (c) out.push_back(' ');
    write_node(node.children[c], out);
  }
  out.push_back(')');
}

}  // namespace

Tree::Tree(TreeNode root) : root_(std::move(root)) {
  int next_leaf = 0;
  number_leaves(root_, next_leaf);
}

Tree Tree::leaf(std::string token) {
  TreeNode node;
  node.token = std::move(token);
  return Tree(std::move(node));
}

Tree Tree::join(const Tree& left, const Tree& right) {
  TreeNode node;
  node.children = {left.root(), right.root()};
  return Tree(std::move(node));
}

bool Tree::is_binary() const { return all_binary(root_); }

std::vector<std::string> Tree::tokens() const {
  std::vector<std::string> out;
  collect_tokens(root_, out);
  return out;
}

std::vector<Span> spans(const Tree& tree) {
  std::vector<Span> out;
  collect_spans(tree.root(), out);
  std::sort(out.begin(), out.end());
  return out;
}

Tree right_branching(int n) {
  if (n < 1) throw Error("right_branching: n must be positive");
  Tree tree = Tree::leaf();
  for (int k = n - 1; k >= 1; --k) tree = Tree::join(Tree::leaf(), tree);
  return tree;
}

Tree left_branching(int n) {
  if (n < 1) throw Error("left_branching: n must be positive");
  Tree tree = Tree::leaf();
  for (int k = 2; k <= n; ++k) tree = Tree::join(tree, Tree::leaf());
  return tree;
}

Tree parse_bracketed(std::string_view text, BracketStyle style) {
  return Tree(BracketParser(text, style).parse());
}

std::string write_bracketed(const Tree& tree) {
  std::string out;
  if (tree.root().is_leaf()) {
    // A bare token would not parse back; keep the single-leaf wrapper.
    out.push_back('(');
    write_node(tree.root(), out);
    out.push_back(')');
    return out;
  }
  write_node(tree.root(), out);
  return out;
}

std::map<std::string, Tree> read_tree_file(const std::string& path, BracketStyle style) {
  const std::string text = fileio::read_file(path);
  std::map<std::string, Tree> trees;
  std::size_t line_no = 0;
  for (std::string_view line : fileio::split_lines(text)) {
    ++line_no;
    if (fileio::trim(line).empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw FormatError(path, line_no, "expected utterance_id<TAB>tree");
    }
    std::string id(line.substr(0, tab));
    try {
      auto [it, inserted] = trees.emplace(id, parse_bracketed(line.substr(tab + 1), style));
      if (!inserted) throw FormatError(path, line_no, "duplicate utterance id " + id);
    } catch (const ParseError& e) {
      throw FormatError(path, line_no, e.what());
    }
  }
  return trees;
}

void write_tree_file(const std::string& path, const std::map<std::string, Tree>& trees) {
  std::string out;
  for (const auto& [id, tree] : trees) {
    out += id;
    out.push_back('\t');
    out += write_bracketed(tree);
    out.push_back('\n');
  }
  fileio::write_file_atomic(path, out);
}

}  // namespace speechparse
