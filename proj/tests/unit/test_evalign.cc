#include <doctest.h>

#include <filesystem>
#include <functional>

#include "../support/oracles.h"
#include "speechparse/evalign.h"
#include "speechparse/fileio.h"

using namespace speechparse;

namespace {

SegmentSequence seq(std::initializer_list<std::pair<double, double>> l, std::string id = "u") {
  SegmentSequence s;
  s.utterance_id = std::move(id);
  for (auto [a, b] : l) s.segments.push_back({a, b});
  return s;
}

SegmentSequence unit_segments(int n, std::string id = "u") {
  SegmentSequence s;
  s.utterance_id = std::move(id);
  for (int k = 0; k < n; ++k) s.segments.push_back({static_cast<double>(k), k + 1.0});
  return s;
}

EvalItem item(std::string id, const std::string& tree, SegmentSequence segs) {
  return {id, parse_bracketed(tree), std::move(segs)};
}

// Lexicographically smallest optimal mapping ("unmapped" after every index)
// by enumerating every injective partial map of positive-overlap pairs.
std::vector<int> brute_force_mapping(const SegmentSequence& oracle_segs, const SegmentSequence& proposed,
                                     double best) {
  const std::size_t m = oracle_segs.size();
  std::vector<int> current(proposed.size(), -1), answer;
  std::vector<char> used(m, 0);
  const auto key = [](const std::vector<int>& v) {
    std::vector<long> k;
    for (int x : v) k.push_back(x < 0 ? 1000 : x);
    return k;
  };
  std::function<void(std::size_t, double)> rec = [&](std::size_t p, double total) {
    if (p == proposed.size()) {
      if (total >= best - 1e-9 && (answer.empty() || key(current) < key(answer))) answer = current;
      return;
    }
    for (std::size_t o = 0; o < m; ++o) {
      if (used[o]) continue;
      const double ov = overlap(proposed.segments[p], oracle_segs.segments[o]);
      if (ov <= 0) continue;
      used[o] = 1;
      current[p] = static_cast<int>(o);
      rec(p + 1, total + ov);
      used[o] = 0;
    }
    current[p] = -1;
    rec(p + 1, total);
  };
  rec(0, 0.0);
  return answer;
}

}  // namespace

TEST_CASE("overlap") {
  CHECK(overlap({0, 0.4}, {0, 0.5}) == doctest::Approx(0.4));
  CHECK(overlap({0, 0.4}, {0.5, 0.9}) == 0.0);
  CHECK(overlap({0, 0.5}, {0.5, 0.9}) == 0.0);
  CHECK(overlap({0.3, 0.9}, {0.5, 1.0}) == doctest::Approx(0.4));
  CHECK(overlap({0.5, 1.0}, {0.3, 0.9}) == doctest::Approx(0.4));
}

TEST_CASE("optimal assignment examples") {
  const auto r = optimal_assignment(seq({{0, 0.4}, {0.4, 0.8}}), seq({{0, 0.5}, {0.5, 1.0}}));
  CHECK(r.mapping == std::vector<int>{0, 1});
  CHECK(r.total_overlap == doctest::Approx(0.7).epsilon(1e-12));

  const auto same = seq({{0, 0.3}, {0.3, 0.5}, {0.7, 1.1}});
  const auto id = optimal_assignment(same, same);
  CHECK(id.mapping == std::vector<int>{0, 1, 2});
  CHECK(id.total_overlap == doctest::Approx(0.3 + 0.2 + 0.4).epsilon(1e-12));

  // Two equally good proposals for one word: the first one gets it.
  CHECK(optimal_assignment(seq({{0, 1}}), seq({{0, 0.5}, {0.5, 1}})).mapping == std::vector<int>{0, -1});
  // A proposal touching nothing stays unmapped.
  CHECK(optimal_assignment(seq({{0, 1}}), seq({{2, 3}})).mapping == std::vector<int>{-1});
  CHECK_THROWS_AS(optimal_assignment(seq({}), seq({{0, 1}})), Error);
  CHECK_THROWS_AS(optimal_assignment(seq({{0, 1}}), seq({})), Error);
}

TEST_CASE("optimal assignment against exhaustive search") {
  Rng rng(17);
  for (int trial = 0; trial < 400; ++trial) {
    const double duration = rng.uniform(0.5, 4.0);
    const auto o = oracle::random_segments(1 + static_cast<int>(rng.below(6)), duration, rng);
    const auto p = oracle::random_segments(1 + static_cast<int>(rng.below(6)), duration, rng);
    const auto r = optimal_assignment(o, p);
    const double best = oracle::brute_force_overlap(o, p);
    CHECK(r.total_overlap == doctest::Approx(best).epsilon(1e-9));
    std::vector<char> seen(o.size(), 0);
    double total = 0;
    double diagonal = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k < o.size()) diagonal += overlap(p.segments[k], o.segments[k]);
      const int m = r.mapping[k];
      if (m < 0) continue;
      CHECK_FALSE(seen[static_cast<std::size_t>(m)]);
      seen[static_cast<std::size_t>(m)] = 1;
      CHECK(overlap(p.segments[k], o.segments[static_cast<std::size_t>(m)]) > 0);
      total += overlap(p.segments[k], o.segments[static_cast<std::size_t>(m)]);
    }
    CHECK(total == doctest::Approx(r.total_overlap).epsilon(1e-12));
    CHECK(r.total_overlap >= diagonal - 1e-12);
    if (o.size() <= 5 && p.size() <= 5) CHECK(r.mapping == brute_force_mapping(o, p, best));
  }
}

TEST_CASE("max weight assignment") {
  const auto [m, total] = max_weight_assignment({{1, 5, 0}, {4, 1, 0}});
  CHECK(m == std::vector<int>{1, 0});
  CHECK(total == 9.0);
  const auto [m2, t2] = max_weight_assignment({{0, 0}, {0, 2}, {0, 3}});
  CHECK(m2 == std::vector<int>{-1, -1, 1});
  CHECK(t2 == 3.0);
  CHECK(max_weight_assignment({{-1.0}}).first == std::vector<int>{-1});
}

TEST_CASE("aligned f1 examples") {
  const auto two = unit_segments(2);
  const auto three = unit_segments(3);
  auto r = aligned_f1({item("u", "((a b) c)", three)}, {item("u", "((a b) c)", three)});
  CHECK(r.f1 == 1.0);
  CHECK(format_report_tsv(r).find("f1\t100.00\n") != std::string::npos);

  r = aligned_f1({item("u", "((a b) c)", three)}, {item("u", "(a (b c))", three)});
  CHECK(r.matched == 1);
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 0.5);
  CHECK(format_report_tsv(r).find("f1\t50.00\n") != std::string::npos);

  // Three fixed segments over two words: the middle one loses its overlap
  // contest on both sides and is unmapped.
  const auto words = seq({{0, 0.5}, {0.5, 1.0}});
  const auto fixed = seq({{0, 0.45}, {0.45, 0.55}, {0.55, 1.0}});
  CHECK(optimal_assignment(words, fixed).mapping == std::vector<int>{0, -1, 1});
  r = aligned_f1({item("u", "(a b)", words)}, {item("u", "(x (y z))", fixed)});
  CHECK(r.matched == 0);
  CHECK(r.predicted == 2);
  CHECK(r.gold == 1);
  CHECK(r.recall == 0.0);
  r = aligned_f1({item("u", "(a b)", words)}, {item("u", "(x (y z))", fixed)}, F1Options{true});
  CHECK(r.matched == 1);
  CHECK(r.recall == 1.0);

  // Extra segments that cover nothing never block spans that avoid them.
  r = aligned_f1({item("u", "(a b)", two)}, {item("u", "((a b) z)", seq({{0, 1}, {1, 2}, {5, 6}}))});
  CHECK(r.matched == 1);
  CHECK(r.predicted == 2);

  CHECK_THROWS_AS(aligned_f1({item("u", "(a b)", two)}, {item("v", "(a b)", two)}), Error);
  CHECK_THROWS_AS(aligned_f1({item("u", "(a b)", two)}, {item("u", "(a b c)", two)}), Error);
  CHECK_THROWS_AS(aligned_f1({item("u", "(a b)", two), item("u", "(a b)", two)}, {item("u", "(a b)", two)}), Error);
  try {
    aligned_f1({item("u1", "(a b)", two), item("u2", "(a b)", two)}, {item("u1", "(a b)", two), item("u3", "(a b)", two)});
    FAIL("expected an id mismatch");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("u2") != std::string::npos);
    CHECK(std::string(e.what()).find("u3") != std::string::npos);
  }
}

TEST_CASE("aligned f1 with oracle segments is plain unlabeled f1") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EvalItem> gold, pred;
    std::vector<std::pair<Tree, Tree>> pairs;
    oracle::Counts total;
    for (int u = 0; u < 10; ++u) {
      const int n = 1 + static_cast<int>(rng.below(10));
      const Tree g = oracle::random_binary_tree(n, rng);
      const Tree p = rng.below(4) == 0 ? g : oracle::random_binary_tree(n, rng);
      const std::string id = "u" + std::to_string(u);
      gold.push_back({id, g, unit_segments(n, id)});
      pred.push_back({id, p, unit_segments(n, id)});
      pairs.emplace_back(g, p);
      const auto c = oracle::bracket_counts(g, p);
      total.matched += c.matched;
      total.predicted += c.predicted;
      total.gold += c.gold;
    }
    const auto r = aligned_f1(gold, pred);
    CHECK(r.matched == total.matched);
    CHECK(r.predicted == total.predicted);
    CHECK(r.gold == total.gold);
    CHECK(100.0 * r.f1 == doctest::Approx(oracle::f1_percent(total)).epsilon(1e-12));
    const auto u = unlabeled_f1(pairs);
    CHECK(u.matched == r.matched);
    CHECK(u.f1 == r.f1);
    CHECK(r.matched <= std::min(r.predicted, r.gold));
    CHECK((r.f1 == 1.0) == (total.matched == total.gold && total.matched == total.predicted));
  }
}

TEST_CASE("branching baselines share only the whole sentence") {
  Rng rng(5);
  for (int n = 2; n <= 20; ++n) {
    const auto r = spans(right_branching(n));
    const auto l = spans(left_branching(n));
    std::vector<Span> common;
    std::set_intersection(r.begin(), r.end(), l.begin(), l.end(), std::back_inserter(common));
    CHECK(common == std::vector<Span>{{1, n}});
  }
  std::vector<EvalItem> gold, right, left;
  long expected_overlap = 0;
  for (int u = 0; u < 30; ++u) {
    const int n = 2 + static_cast<int>(rng.below(8));
    const std::string id = "u" + std::to_string(u);
    gold.push_back({id, oracle::random_binary_tree(n, rng), unit_segments(n, id)});
    right.push_back({id, right_branching(n), unit_segments(n, id)});
    left.push_back({id, left_branching(n), unit_segments(n, id)});
    ++expected_overlap;
  }
  const auto rr = aligned_f1(gold, right);
  const auto lr = aligned_f1(gold, left);
  // Every gold span other than the whole sentence is matched by at most
  // one of the two baselines.
  long both = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    const auto g = spans(gold[k].tree);
    const auto r = spans(right[k].tree);
    const auto l = spans(left[k].tree);
    for (const Span& s : g) {
      if (std::binary_search(r.begin(), r.end(), s) && std::binary_search(l.begin(), l.end(), s)) ++both;
    }
  }
  CHECK(both == expected_overlap);
  CHECK(rr.matched + lr.matched - both <= rr.gold);
}

TEST_CASE("branching score") {
  const auto close = [](BranchingScore s, double r, double l) {
    return std::abs(s.right_fraction - r) < 1e-12 && std::abs(s.left_fraction - l) < 1e-12;
  };
  CHECK(close(branching_score({parse_bracketed("(a b)"), parse_bracketed("(c d)")}), 1.0, 1.0));
  CHECK(close(branching_score({right_branching(3), right_branching(5)}), 1.0, (1.0 / 2 + 1.0 / 4) / 2));
  CHECK(close(branching_score({left_branching(4)}), 1.0 / 3, 1.0));
  // Hand counts: (1 (2 3)) r 2/2 l 1/2; ((1 2) 3) r 1/2 l 2/2;
  // ((1 2) (3 4)) r 2/3 l 2/3.
  const std::vector<Tree> mixed{parse_bracketed("(1 (2 3))"), parse_bracketed("((1 2) 3)"),
                                parse_bracketed("((1 2) (3 4))")};
  CHECK(close(branching_score(mixed), (1 + 0.5 + 2.0 / 3) / 3, (0.5 + 1 + 2.0 / 3) / 3));
  std::vector<Tree> with_single = mixed;
  with_single.push_back(Tree::leaf());
  CHECK(close(branching_score(with_single), (1 + 0.5 + 2.0 / 3) / 3, (0.5 + 1 + 2.0 / 3) / 3));
  CHECK(close(branching_score({Tree::leaf()}), 0.0, 0.0));
  CHECK_THROWS_AS(branching_score({}), Error);
}

TEST_CASE("reports and run summaries") {
  const auto r = aligned_f1({item("u", "((a b) c)", unit_segments(3))}, {item("u", "(a (b c))", unit_segments(3))});
  const std::string tsv = format_report_tsv(r);
  CHECK(tsv.rfind("precision\t50.00\nrecall\t50.00\nf1\t50.00\n", 0) == 0);
  CHECK(tsv.find("u\t1\t2\t2\n") != std::string::npos);
  CHECK(format_report_text(r).find("F1:        50.00") != std::string::npos);

  const auto path = (std::filesystem::temp_directory_path() / "speechparse_report_test.tsv").string();
  fileio::write_file_atomic(path, tsv);
  CHECK(read_report_f1(path) == 50.0);
  fileio::write_file_atomic(path, "precision\t1\n");
  CHECK_THROWS_AS(read_report_f1(path), FormatError);
  std::filesystem::remove(path);

  const auto s = summarize_runs({50.0, 52.0, 54.0});
  CHECK(s.runs == 3);
  CHECK(s.mean == 52.0);
  CHECK(s.stdev == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(summarize_runs({7.0}).stdev == 0.0);
}
