#include <doctest.h>

#include <chrono>

#include "../support/oracles.h"
#include "speechparse/chart.h"

using namespace speechparse;

namespace {

SpanChart random_chart(int n, Rng& rng) {
  SpanChart c(n);
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= n; ++j) c.set(i, j, rng.uniform(-1.0, 1.0));
  }
  return c;
}

}  // namespace

TEST_CASE("cky on hand charts") {
  SpanChart two(2);
  two.set(1, 1, 0.5);
  two.set(2, 2, -0.25);
  two.set(1, 2, 2.0);
  const Decoded d2 = cky_decode(two);
  CHECK(write_bracketed(d2.tree) == "(1 2)");
  CHECK(d2.score == 0.5 - 0.25 + 2.0);
  CHECK(tree_score(two, d2.tree) == 0.5 - 0.25 + 2.0);

  SpanChart three(3);
  three.set(1, 2, 5.0);
  three.set(2, 3, 1.0);
  const Decoded d3 = cky_decode(three);
  CHECK(write_bracketed(d3.tree) == "((1 2) 3)");
  CHECK(d3.score == 5.0);
  CHECK(tree_score(three, parse_bracketed("((1 2) 3)")) == 5.0);

  CHECK(write_bracketed(cky_decode(SpanChart(3)).tree) == "((1 2) 3)");
  CHECK(tree_score(SpanChart(4), parse_bracketed("(1 ((2 3) 4))")) == 0.0);
  CHECK(write_bracketed(cky_decode(SpanChart(1)).tree) == "(1)");
}

TEST_CASE("chart errors") {
  CHECK_THROWS_AS(SpanChart(0), Error);
  SpanChart c(3);
  CHECK_THROWS_AS(c.set(2, 1, 1.0), Error);
  CHECK_THROWS_AS(c.set(1, 4, 1.0), Error);
  CHECK_THROWS_AS(c.set(1, 2, std::nan("")), Error);
  CHECK_THROWS_AS(tree_score(c, right_branching(4)), Error);
  CHECK_THROWS_AS(tree_score(c, parse_bracketed("(1 2 3)")), Error);
  CHECK_THROWS_AS(brute_force_best(SpanChart(kBruteForceMaxLeaves + 1)), Error);
}

TEST_CASE("enumeration sizes follow the Catalan numbers") {
  const std::size_t catalan[] = {1, 1, 2, 5, 14, 42, 132, 429};
  for (int n = 1; n <= 8; ++n) {
    const auto trees = enumerate_binary_trees(n);
    CHECK(trees.size() == catalan[n - 1]);
    std::set<std::string> distinct;
    for (const auto& t : trees) distinct.insert(write_bracketed(t));
    CHECK(distinct.size() == trees.size());
  }
}

TEST_CASE("cky agrees with brute force, including ties") {
  Rng rng(3);
  for (int n = 1; n <= 8; ++n) {
    for (int trial = 0; trial < 100; ++trial) {
      SpanChart c = random_chart(n, rng);
      if (trial % 4 == 0) {
        // Coarse scores make ties common.
        for (int i = 1; i <= n; ++i)
          for (int j = i; j <= n; ++j) c.set(i, j, static_cast<double>(rng.below(3)));
      }
      const Decoded a = cky_decode(c);
      const Decoded b = brute_force_best(c);
      CHECK(a.tree == b.tree);
      CHECK(a.score == b.score);
      CHECK(a.score == tree_score(c, a.tree));
    }
  }
}

TEST_CASE("shifting every cell keeps the argmax") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    SpanChart c = random_chart(n, rng);
    const Decoded before = cky_decode(c);
    c.shift(0.75);
    const Decoded after = cky_decode(c);
    CHECK(after.tree == before.tree);
    CHECK(after.score == doctest::Approx(before.score + 0.75 * (2 * n - 1)).epsilon(1e-12));
  }
}

TEST_CASE("n=200 decodes quickly") {
  Rng rng(9);
  const SpanChart c = random_chart(200, rng);
  const auto t0 = std::chrono::steady_clock::now();
  const Decoded d = cky_decode(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(d.tree.num_leaves() == 200);
  CHECK(secs < 1.0);
}
