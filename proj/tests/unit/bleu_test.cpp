#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spamgraph/bleu.hpp"
#include "spamgraph/rng.hpp"

namespace spamgraph {
namespace {

TEST(WhitespaceTokens, SplitsOnAnyWhitespace) {
  EXPECT_EQ(whitespace_tokens("  a\tb\n c  "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(whitespace_tokens("   ").empty());
}

TEST(SentenceBleu, IdenticalIsOne) {
  EXPECT_DOUBLE_EQ(sentence_bleu("one two three four five", "one two three four five"), 1.0);
}

TEST(SentenceBleu, DisjointIsZero) {
  EXPECT_DOUBLE_EQ(sentence_bleu("a b c d", "w x y z"), 0.0);
  EXPECT_DOUBLE_EQ(sentence_bleu("", "w x y z"), 0.0);
}

TEST(SentenceBleu, CatOnMatAgainstOracle) {
  const auto c = whitespace_tokens("the cat sat on the mat");
  const auto r = whitespace_tokens("the cat is on the mat");
  // Trigram precision 0 without smoothing.
  EXPECT_DOUBLE_EQ(sentence_bleu(c, r), 0.0);
  EXPECT_NEAR(sentence_bleu(c, r, {4, true}), oracle::bleu(c, r, 4, true), 1e-12);
  // Hand value with add-one: p = 6/7, 4/6, 2/5, 1/4, BP = 1.
  const double hand = std::exp((std::log(6.0 / 7) + std::log(4.0 / 6) + std::log(2.0 / 5) +
                                std::log(1.0 / 4)) / 4);
  EXPECT_NEAR(sentence_bleu(c, r, {4, true}), hand, 1e-12);
}

TEST(SentenceBleu, ClippedCountsAndBrevityPenalty) {
  // "the the the the" vs "the cat": unigram clip 1/4, no bigram match.
  EXPECT_DOUBLE_EQ(sentence_bleu("the the the the", "the cat", {1, false}), 0.25);
  // Short candidate: all unigrams match, c = 2, r = 4 -> BP = exp(1 - 2).
  EXPECT_NEAR(sentence_bleu("a b", "a b c d", {1, false}), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(sentence_bleu("a b", "a b c d", {2, false}), std::exp(-1.0), 1e-15);
}

TEST(SentenceBleu, RandomPairsMatchOracle) {
  Rng rng(8);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  for (int t = 0; t < 200; ++t) {
    std::vector<std::string> c, r;
    for (auto n = rng.between(1, 15); n > 0; --n) c.push_back(vocab[rng.below(5)]);
    for (auto n = rng.between(1, 15); n > 0; --n) r.push_back(vocab[rng.below(5)]);
    for (bool smooth : {false, true}) {
      EXPECT_NEAR(sentence_bleu(c, r, {4, smooth}), oracle::bleu(c, r, 4, smooth), 1e-12);
    }
  }
}

}  // namespace
}  // namespace spamgraph
