#include "speechparse/evalign.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "speechparse/fileio.h"

namespace speechparse {

double overlap(const Segment& a, const Segment& b) {
  return std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

std::pair<std::vector<int>, double> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const int rows = static_cast<int>(weights.size());
  const int cols = rows ? static_cast<int>(weights[0].size()) : 0;
  std::vector<int> assignment(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) return {assignment, 0.0};
  // Square min-cost problem; padding and negative weights cost 0 (unmatched).
  const int n = std::max(rows, cols);
  const auto cost = [&](int r, int c) {
    if (r >= rows || c >= cols) return 0.0;
    const double w = weights[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return w > 0.0 ? -w : 0.0;
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Potentials and matching, 1-based with column 0 as the virtual start.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int r = 1; r <= n; ++r) {
    match[0] = r;
    int c0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(c0)] = 1;
      const int r0 = match[static_cast<std::size_t>(c0)];
      double delta = kInf;
      int c1 = 0;
      for (int c = 1; c <= n; ++c) {
        if (used[static_cast<std::size_t>(c)]) continue;
        const double cur = cost(r0 - 1, c - 1) - u[static_cast<std::size_t>(r0)] - v[static_cast<std::size_t>(c)];
        if (cur < minv[static_cast<std::size_t>(c)]) {
          minv[static_cast<std::size_t>(c)] = cur;
          way[static_cast<std::size_t>(c)] = c0;
        }
        if (minv[static_cast<std::size_t>(c)] < delta) {
          delta = minv[static_cast<std::size_t>(c)];
          c1 = c;
        }
      }
      for (int c = 0; c <= n; ++c) {
        if (used[static_cast<std::size_t>(c)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(c)])] += delta;
          v[static_cast<std::size_t>(c)] -= delta;
        } else {
          minv[static_cast<std::size_t>(c)] -= delta;
        }
      }
      c0 = c1;
    } while (match[static_cast<std::size_t>(c0)] != 0);
    do {
      const int c1 = way[static_cast<std::size_t>(c0)];
      match[static_cast<std::size_t>(c0)] = match[static_cast<std::size_t>(c1)];
      c0 = c1;
    } while (c0 != 0);
  }
  double total = 0.0;
  for (int c = 1; c <= n; ++c) {
    const int r = match[static_cast<std::size_t>(c)] - 1;
    if (r < rows && c - 1 < cols) {
      const double w = weights[static_cast<std::size_t>(r)][static_cast<std::size_t>(c - 1)];
      if (w > 0.0) {
        assignment[static_cast<std::size_t>(r)] = c - 1;
        total += w;
      }
    }
  }
  return {assignment, total};
}

AlignmentResult optimal_assignment(const SegmentSequence& oracle, const SegmentSequence& proposed) {
  if (oracle.segments.empty() || proposed.segments.empty()) {
    throw Error("optimal_assignment: empty segment sequence");
  }
  const std::size_t rows = proposed.size();
  const std::size_t cols = oracle.size();
  std::vector<std::vector<double>> w(rows, std::vector<double>(cols, 0.0));
  for (std::size_t p = 0; p < rows; ++p) {
    for (std::size_t o = 0; o < cols; ++o) w[p][o] = overlap(proposed.segments[p], oracle.segments[o]);
  }
  const double best = max_weight_assignment(w).second;
  const double tolerance = 1e-12 * (1.0 + best);

  // Fix rows in order, each to the smallest column that still admits an
  // optimal completion of the remaining rows.
  AlignmentResult result;
  result.mapping.assign(rows, -1);
  std::vector<char> taken(cols, 0);
  double fixed = 0.0;
  const auto completion = [&](std::size_t from_row) {
    std::vector<std::vector<double>> sub;
    for (std::size_t p = from_row; p < rows; ++p) {
      std::vector<double> row;
      for (std::size_t o = 0; o < cols; ++o) row.push_back(taken[o] ? 0.0 : w[p][o]);
      sub.push_back(std::move(row));
    }
    return max_weight_assignment(sub).second;
  };
  for (std::size_t p = 0; p < rows; ++p) {
    for (std::size_t o = 0; o < cols; ++o) {
      if (taken[o] || w[p][o] <= 0.0) continue;
      taken[o] = 1;
      if (fixed + w[p][o] + completion(p + 1) >= best - tolerance) {
        result.mapping[p] = static_cast<int>(o);
        fixed += w[p][o];
        break;
      }
      taken[o] = 0;
    }
  }
  for (std::size_t p = 0; p < rows; ++p) {
    if (result.mapping[p] >= 0) result.total_overlap += w[p][static_cast<std::size_t>(result.mapping[p])];
  }
  return result;
}

namespace {

void finish(F1Report& report) {
  report.precision = report.predicted ? static_cast<double>(report.matched) / report.predicted : 0.0;
  report.recall = report.gold ? static_cast<double>(report.matched) / report.gold : 0.0;
  const double sum = report.precision + report.recall;
  report.f1 = sum > 0.0 ? 2.0 * report.precision * report.recall / sum : 0.0;
}

}  // namespace

F1Report aligned_f1(const std::vector<EvalItem>& gold, const std::vector<EvalItem>& pred, const F1Options& options) {
  std::map<std::string, const EvalItem*> pred_by_id;
  for (const auto& item : pred) {
    if (!pred_by_id.emplace(item.utterance_id, &item).second) {
      throw Error("aligned_f1: duplicate predicted utterance " + item.utterance_id);
    }
  }
  std::set<std::string> gold_ids;
  std::string missing;
  for (const auto& item : gold) {
    if (!gold_ids.insert(item.utterance_id).second) throw Error("aligned_f1: duplicate gold utterance " + item.utterance_id);
    if (!pred_by_id.count(item.utterance_id)) missing += " " + item.utterance_id;
  }
  std::string extra;
  for (const auto& item : pred) {
    if (!gold_ids.count(item.utterance_id)) extra += " " + item.utterance_id;
  }
  if (!missing.empty() || !extra.empty()) {
    throw Error("aligned_f1: utterance ids differ;" + (missing.empty() ? std::string() : " no prediction for:" + missing) +
                (extra.empty() ? std::string() : " no gold for:" + extra));
  }

  F1Report report;
  for (const auto& g : gold) {
    const EvalItem& p = *pred_by_id.at(g.utterance_id);
    if (g.tree.num_leaves() != static_cast<int>(g.segments.size())) {
      throw Error("aligned_f1: gold tree of " + g.utterance_id + " has " + std::to_string(g.tree.num_leaves()) +
                  " leaves but " + std::to_string(g.segments.size()) + " segments");
    }
    if (p.tree.num_leaves() != static_cast<int>(p.segments.size())) {
      throw Error("aligned_f1: predicted tree of " + p.utterance_id + " has " + std::to_string(p.tree.num_leaves()) +
                  " leaves but " + std::to_string(p.segments.size()) + " segments");
    }
    const AlignmentResult alignment = optimal_assignment(g.segments, p.segments);
    const std::vector<Span> gold_spans = spans(g.tree);
    const std::vector<Span> pred_spans = spans(p.tree);
    std::vector<char> used(gold_spans.size(), 0);
    UtteranceCounts counts{g.utterance_id, 0, static_cast<long>(pred_spans.size()), static_cast<long>(gold_spans.size())};
    for (const Span& s : pred_spans) {
      int lo = std::numeric_limits<int>::max();
      int hi = -1;
      int mapped = 0;
      bool blocked = false;
      for (int k = s.i; k <= s.j; ++k) {
        const int o = alignment.mapping[static_cast<std::size_t>(k - 1)];
        if (o < 0) {
          if (!options.allow_unmapped) blocked = true;
          continue;
        }
        lo = std::min(lo, o);
        hi = std::max(hi, o);
        ++mapped;
      }
      // The mapping is injective, so `mapped` distinct indices fill [lo, hi]
      // exactly when the range has that many slots.
      if (blocked || mapped == 0 || hi - lo + 1 != mapped) continue;
      const Span image{lo + 1, hi + 1};
      const auto it = std::lower_bound(gold_spans.begin(), gold_spans.end(), image);
      if (it == gold_spans.end() || *it != image) continue;
      const auto at = static_cast<std::size_t>(it - gold_spans.begin());
      if (used[at]) continue;
      used[at] = 1;
      ++counts.matched;
    }
    report.matched += counts.matched;
    report.predicted += counts.predicted;
    report.gold += counts.gold;
    report.per_utterance.push_back(std::move(counts));
  }
  finish(report);
  return report;
}

F1Report unlabeled_f1(const std::vector<std::pair<Tree, Tree>>& gold_pred) {
  F1Report report;
  int index = 0;
  for (const auto& [gold, pred] : gold_pred) {
    if (gold.num_leaves() != pred.num_leaves()) throw Error("unlabeled_f1: leaf count mismatch");
    const std::vector<Span> g = spans(gold);
    const std::vector<Span> p = spans(pred);
    std::vector<Span> common;
    std::set_intersection(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(common));
    UtteranceCounts counts{std::to_string(index++), static_cast<long>(common.size()), static_cast<long>(p.size()),
                           static_cast<long>(g.size())};
    report.matched += counts.matched;
    report.predicted += counts.predicted;
    report.gold += counts.gold;
    report.per_utterance.push_back(std::move(counts));
  }
  finish(report);
  return report;
}

BranchingScore branching_score(const std::vector<Tree>& trees) {
  if (trees.empty()) throw Error("branching_score: no trees");
  BranchingScore score;
  std::size_t counted = 0;
  for (const Tree& t : trees) {
    const int n = t.num_leaves();
    if (n < 2) continue;
    const std::vector<Span> s = spans(t);
    const auto shared = [&](const Tree& reference) {
      const std::vector<Span> r = spans(reference);
      std::vector<Span> common;
      std::set_intersection(s.begin(), s.end(), r.begin(), r.end(), std::back_inserter(common));
      return static_cast<double>(common.size()) / static_cast<double>(s.size());
    };
    score.right_fraction += shared(right_branching(n));
    score.left_fraction += shared(left_branching(n));
    ++counted;
  }
  if (counted) {
    score.right_fraction /= static_cast<double>(counted);
    score.left_fraction /= static_cast<double>(counted);
  }
  return score;
}

std::string format_report_tsv(const F1Report& report) {
  std::string out;
  out += "precision\t" + fileio::format_fixed(100.0 * report.precision, 2) + "\n";
  out += "recall\t" + fileio::format_fixed(100.0 * report.recall, 2) + "\n";
  out += "f1\t" + fileio::format_fixed(100.0 * report.f1, 2) + "\n";
  out += "matched\t" + std::to_string(report.matched) + "\n";
  out += "predicted\t" + std::to_string(report.predicted) + "\n";
  out += "gold\t" + std::to_string(report.gold) + "\n";
  for (const auto& u : report.per_utterance) {
    out += u.utterance_id + "\t" + std::to_string(u.matched) + "\t" + std::to_string(u.predicted) + "\t" +
           std::to_string(u.gold) + "\n";
  }
  return out;
}

std::string format_report_text(const F1Report& report) {
  std::string out;
  out += "utterances: " + std::to_string(report.per_utterance.size()) + "\n";
  out += "constituents: matched " + std::to_string(report.matched) + ", predicted " + std::to_string(report.predicted) +
         ", gold " + std::to_string(report.gold) + "\n";
  out += "precision: " + fileio::format_fixed(100.0 * report.precision, 2) + "\n";
  out += "recall:    " + fileio::format_fixed(100.0 * report.recall, 2) + "\n";
  out += "F1:        " + fileio::format_fixed(100.0 * report.f1, 2) + "\n";
  return out;
}

SeedSummary summarize_runs(const std::vector<double>& values) {
  SeedSummary s;
  s.runs = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

double read_report_f1(const std::string& path) {
  const std::string text = fileio::read_file(path);
  std::size_t line_no = 0;
  for (std::string_view line : fileio::split_lines(text)) {
    ++line_no;
    const auto cols = fileio::split(line, '\t');
    if (cols.size() == 2 && cols[0] == "f1") {
      double v = 0.0;
      if (!fileio::parse_double(cols[1], v)) throw FormatError(path, line_no, "bad f1 value");
      return v;
    }
  }
  throw FormatError(path, 0, "no f1 row");
}

}  // namespace speechparse
