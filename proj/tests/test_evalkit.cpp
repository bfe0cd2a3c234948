// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "hoprouter/error.hpp"
#include "hoprouter/evalkit.hpp"
#include "oracles.hpp"

using namespace hoprouter;
using evalkit::f1_score;
using evalkit::f1_single;
using evalkit::normalize_text;

TEST_CASE("normalize_text examples") {
  CHECK(normalize_text("Hello, World!") == "hello world");
  CHECK(normalize_text("  A\tB  ") == "a b");
  CHECK(normalize_text("...") == "");
  CHECK(normalize_text("") == "");
}

TEST_CASE("normalize_text leaves non-ASCII bytes alone") {
  CHECK(normalize_text("Caf\xC3\xA9 \xE2\x80\x94 ok") == "caf\xC3\xA9 \xE2\x80\x94 ok");
}

TEST_CASE("f1_score examples") {
  const std::vector<std::string> cat{"the cat"};
  CHECK(f1_score("The cat.", cat).value == 1.0);
  CHECK(f1_score("dog", std::vector<std::string>{"cat"}).value == 0.0);
  CHECK(f1_score("the cat sat", cat).value == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(f1_score("", cat).value == 0.0);
  CHECK(f1_score("!!!", cat).value == 0.0);
}

TEST_CASE("f1_score counts repeated tokens as a multiset") {
  // response "a a", truth "a": |I| = 1, p = 1/2, r = 1 -> 2/3
  CHECK(f1_single("a a", "a") == doctest::Approx(2.0 / 3.0));
  CHECK(f1_single("a a", "a a") == 1.0);
}

TEST_CASE("f1_score rejects an empty reference list") {
  CHECK_THROWS_AS(f1_score("x", std::vector<std::string>{}), EmptyTruthList);
}

namespace {

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> vocab = {"the", "The", "cat", "cat.", "sat", "on", "mat", "A", "a", "dog,",
                                                 "!", "42", "4", "x", "  ", "\t", "Hello", "world?"};
  std::uniform_int_distribution<int> len(0, 7);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string s;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) s += vocab[pick(rng)] + (rng() % 3 == 0 ? "\n" : " ");
  return s;
}

}  // namespace

TEST_CASE("f1 properties: range, symmetry, idempotence, max-reference monotonicity") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::string a = random_text(rng);
    const std::string b = random_text(rng);
    const std::string c = random_text(rng);
    const double ab = f1_single(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(ab == doctest::Approx(f1_single(b, a)).epsilon(1e-15));
    CHECK(normalize_text(normalize_text(a)) == normalize_text(a));
    CHECK(f1_score(a, std::vector<std::string>{b, c}).value >= f1_score(a, std::vector<std::string>{b}).value);
  }
}

TEST_CASE("f1 matches the brute-force oracle exactly") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string r = random_text(rng);
    std::vector<std::string> truths(1 + rng() % 3);
    for (auto& t : truths) t = random_text(rng);
    CHECK(f1_score(r, truths).value == oracle::brute_f1(r, truths));
  }
}
