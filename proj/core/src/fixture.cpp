#include "spamgraph/fixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "spamgraph/error.hpp"
#include "spamgraph/rng.hpp"

namespace spamgraph {

namespace {

constexpr std::array<std::string_view, 24> kGenuineWords{
    "battery", "charger", "cable",  "screen", "manual", "shipping", "box",    "size",
    "color",   "fabric",  "handle", "lid",    "button", "weight",  "noise",  "smell",
    "fits",    "returned", "okay",  "average", "works", "daily",   "kitchen", "garden"};

constexpr std::array<std::string_view, 24> kSpamWords{
    "amazing",  "best",      "ever",    "perfect",  "incredible", "love",
    "must",     "buy",       "now",     "fantastic", "stunning",  "flawless",
    "awesome",  "wonderful", "highly",  "recommend", "superb",    "excellent",
    "deal",     "bargain",   "premium", "brilliant", "gorgeous",  "unbeatable"};

constexpr std::int64_t kYear2022 = 1640995200;  // 2022-01-01T00:00:00Z
constexpr std::int64_t kYearSeconds = 365 * 86400;

template <std::size_t N>
std::string random_text(Rng& rng, const std::array<std::string_view, N>& words, std::size_t lo,
                        std::size_t hi) {
  const auto len = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(lo),
                                                        static_cast<std::int64_t>(hi)));
  std::string out;
  for (std::size_t i = 0; i < len; ++i) {
    if (i > 0) out += ' ';
    out += words[rng.below(N)];
  }
  return out;
}

std::string id(std::string_view prefix, std::size_t k) {
  std::string s(prefix);
  s += std::to_string(k);
  return s;
}

}  // namespace

std::vector<ReviewRecord> make_separable_corpus(const SeparableCorpusOptions& o) {
  if (o.reviews == 0 || o.spam_fraction < 0.0 || o.spam_fraction > 1.0 ||
      o.spam_reviews_per_user == 0 || o.genuine_reviews_per_user == 0 ||
      o.spam_products == 0 || o.spam_products > o.products) {
    throw InvalidArgument("separable corpus: inconsistent options");
  }
  Rng rng(o.seed);
  const auto n_spam = static_cast<std::size_t>(std::floor(o.spam_fraction * o.reviews + 0.5));
  const std::int64_t burst = kYear2022 + rng.between(0, 10) * 30 * 86400;

  std::vector<ReviewRecord> out;
  out.reserve(o.reviews);
  for (std::size_t k = 0; k < n_spam; ++k) {
    ReviewRecord r;
    r.user_id = id("spammer", k / o.spam_reviews_per_user);
    r.product_id = id("p", rng.below(o.spam_products));
    r.rating = 5;
    r.timestamp = burst + rng.between(0, 5 * 86400);
    r.text = random_text(rng, kSpamWords, 8, 16);
    r.label = Label::spam;
    out.push_back(std::move(r));
  }
  for (std::size_t k = n_spam; k < o.reviews; ++k) {
    ReviewRecord r;
    r.user_id = id("user", (k - n_spam) / o.genuine_reviews_per_user);
    r.product_id = id("p", rng.below(o.products));
    r.rating = static_cast<int>(rng.between(1, 5));
    r.timestamp = kYear2022 + rng.between(0, kYearSeconds - 1);
    r.text = random_text(rng, kGenuineWords, 8, 16);
    r.label = Label::normal;
    out.push_back(std::move(r));
  }
  rng.shuffle(out.begin(), out.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].review_id = i;
  return out;
}

std::vector<ReviewRecord> make_base_corpus(const BaseCorpusOptions& o) {
  if (o.reviews == 0 || o.products == 0 || o.users == 0) {
    throw InvalidArgument("base corpus: counts must be positive");
  }
  Rng rng(o.seed);
  std::vector<ReviewRecord> out;
  out.reserve(o.reviews);
  for (std::size_t i = 0; i < o.reviews; ++i) {
    ReviewRecord r;
    r.review_id = i;
    // Every product and user appears at least once when counts allow.
    const auto product = i < o.products ? i : rng.below(o.products);
    const double u = rng.uniform();
    const auto user = i < o.users ? i : static_cast<std::size_t>(std::floor(u * u * o.users));
    r.product_id = id("p", product);
    r.user_id = id("u", user);
    const bool weak = product % 2 == 0;
    r.rating = weak ? static_cast<int>(rng.between(1, 5)) : (rng.below(10) == 0 ? 4 : 5);
    r.timestamp = kYear2022 - 3 * kYearSeconds + rng.between(0, 4 * kYearSeconds - 1);
    r.text = random_text(rng, kGenuineWords, 5, 20);
    r.label = Label::unknown;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace spamgraph
