#pragma once

#include <cstdint>
#include <vector>

#include "spamgraph/records.hpp"

namespace spamgraph {

// Small labeled corpus whose classes are separable by construction: spam
// reviews come from a handful of accounts, all rate 5, cluster in one month
// on a few products, and draw words from a vocabulary disjoint from the
// genuine reviews.
struct SeparableCorpusOptions {
  std::size_t reviews = 300;
  double spam_fraction = 0.2;
  std::size_t spam_reviews_per_user = 3;
  std::size_t genuine_reviews_per_user = 4;
  std::size_t products = 30;
  std::size_t spam_products = 10;
  std::uint64_t seed = 0;
};

std::vector<ReviewRecord> make_separable_corpus(const SeparableCorpusOptions& options = {});

// Unlabeled genuine-looking corpus for exercising the synthesis pipeline.
// Half of the products are "weak" (ratings uniform 1..5), the rest mostly
// 5-star. User activity is skewed so that a few accounts write many reviews.
struct BaseCorpusOptions {
  std::size_t reviews = 86800;
  std::size_t products = 2000;
  std::size_t users = 20000;
  std::uint64_t seed = 0;
};

std::vector<ReviewRecord> make_base_corpus(const BaseCorpusOptions& options = {});

}  // namespace spamgraph
