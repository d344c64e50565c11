#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spamgraph/bleu.hpp"
#include "spamgraph/http.hpp"
#include "spamgraph/records.hpp"

namespace spamgraph {

// ---------------------------------------------------------------- targets

struct ProductRatingSummary {
  std::size_t reviews = 0;
  double mean_rating = 0.0;
};
std::map<std::string, ProductRatingSummary> product_rating_summary(
    std::span<const ReviewRecord> records);

// Products whose mean rating is below `threshold`, sampled uniformly without
// replacement (all of them when fewer than `count` qualify).
std::vector<std::string> select_target_products(std::span<const ReviewRecord> records,
                                                double threshold, std::size_t count,
                                                std::uint64_t seed);

// Earliest genuine review of the product, ties broken by review_id.
const ReviewRecord& first_review_of(std::span<const ReviewRecord> records,
                                    const std::string& product_id);

// ------------------------------------------------------------- generation

enum class Sentiment { positive, negative };
std::string to_string(Sentiment s);
Sentiment parse_sentiment(const std::string& s);

struct GenerationRequest {
  std::string product_name;
  std::string product_category;
  std::string product_description;
  std::vector<std::string> reference_reviews;
  std::size_t review_number = 5;
  Sentiment sentiment = Sentiment::positive;
  std::size_t max_words = 100;
  void validate() const;
};

std::string render_generation_prompt(const GenerationRequest& request);

struct ChatMessage {
  std::string role;
  std::string content;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Returns the assistant message for the conversation.
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

// POST {"messages": [{"role", "content"}, ...]} -> {"content": "..."}.
class HttpChatClient final : public ChatClient {
 public:
  HttpChatClient(std::string endpoint, std::string api_key, RetryPolicy retry = {});
  // Reads CHAT_API_KEY from the environment.
  static HttpChatClient from_env(std::string endpoint, RetryPolicy retry = {});
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  std::string endpoint_;
  std::string api_key_;
  RetryPolicy retry_;
};

// Offline stand-in for a chat model. Reads the requested count, sentiment and
// product name back out of a generation prompt and emits that many
// "Review k." paragraphs built from phrase templates, with an optional
// preamble and varying markdown and paragraph breaks. Output is a pure
// function of (seed, prompt).
class StubChatClient final : public ChatClient {
 public:
  explicit StubChatClient(std::uint64_t seed) : seed_(seed) {}
  std::string complete(const std::vector<ChatMessage>& messages) override;

  // The review bodies the stub produces for a prompt, without markers.
  std::vector<std::string> reviews_for(const std::string& prompt) const;

 private:
  std::uint64_t seed_;
};

// Sends the rendered prompt as a single user message.
std::string generate_reviews(const GenerationRequest& request, ChatClient& client);

struct ParseReport {
  std::size_t expected = 0;
  std::size_t parsed = 0;
  std::size_t shortfall() const { return parsed < expected ? expected - parsed : 0; }
  std::size_t surplus() const { return parsed > expected ? parsed - expected : 0; }
  bool complete() const { return parsed == expected; }
};

struct ParsedReviews {
  std::vector<std::string> reviews;
  ParseReport report;
};

// Splits a completion on line-leading "Review <k>." (any case) or bare "<k>."
// markers and strips them. Text before the first marker is ignored. Never
// throws.
ParsedReviews parse_reviews(std::string_view completion, std::size_t expected);

// ------------------------------------------------------------- injection

struct TargetPlan {
  std::string product_id;
  std::string reference_review;
  std::vector<std::string> user_ids;      // one per generated review
  std::vector<std::string> texts;         // filled by generation
  std::vector<std::int64_t> timestamps;   // filled by injection when empty
  int rating = 5;
};

struct SynthesisPlan {
  std::uint64_t seed = 0;
  std::size_t reviews_per_product = 5;
  std::size_t max_words = 100;
  Sentiment sentiment = Sentiment::positive;
  std::vector<TargetPlan> targets;
};

// Users sampled without replacement with probability proportional to their
// review count. For each product, ceil(r/2) users post 2, 2, ..., (1) of its
// r reviews; a user serves exactly one product. Returned vectors hold one
// user id per review slot.
std::vector<std::vector<std::string>> assign_compromised_users(
    std::span<const ReviewRecord> records, std::size_t n_products,
    std::size_t reviews_per_product, std::uint64_t seed);

struct PlanOptions {
  double rating_threshold = 4.3;
  std::size_t target_count = 500;
  std::size_t reviews_per_product = 5;
  std::size_t max_words = 100;
  Sentiment sentiment = Sentiment::positive;
  std::uint64_t seed = 0;
};

// Targets, reference reviews and compromised users; texts stay empty.
SynthesisPlan make_synthesis_plan(std::span<const ReviewRecord> records, const PlanOptions& options);

struct ProductMetadata {
  std::string name;
  std::string category;
  std::string description;
};

GenerationRequest generation_request_for(const SynthesisPlan& plan, const TargetPlan& target,
                                         const ProductMetadata* metadata);

// Per-target completion reports from fill_plan_texts.
struct GenerationOutcome {
  std::string product_id;
  ParseReport report;
};

// Generates and parses texts for every target lacking them. Targets whose
// completion yields fewer reviews than users keep only the parsed ones
// (user slots are trimmed to match). Up to max_concurrency requests run at
// once; results are assembled in target order.
std::vector<GenerationOutcome> fill_plan_texts(
    SynthesisPlan& plan, ChatClient& client,
    const std::map<std::string, ProductMetadata>& metadata, std::size_t max_concurrency = 1);

inline constexpr std::int64_t kInjectionWindowSeconds = 5 * 86400;

// Genuine records keep every field except label, which becomes normal.
// Spam records are appended with rating 5 (the plan's rating), label spam,
// and timestamps uniform in [t0, t0 + 5 days] where t0 is the product's
// earliest genuine timestamp.
std::vector<ReviewRecord> inject_spam(std::span<const ReviewRecord> records,
                                      const SynthesisPlan& plan, std::uint64_t seed);

std::string plan_to_json(const SynthesisPlan& plan);
SynthesisPlan plan_from_json(const std::string& text);
void save_plan(const std::filesystem::path& path, const SynthesisPlan& plan);
SynthesisPlan load_plan(const std::filesystem::path& path);

// ------------------------------------------------------------ statistics

struct CorpusStats {
  std::size_t texts = 0;
  std::size_t max_words = 0;
  double mean_words = 0.0;
  double std_words = 0.0;
  double mean_pairwise_bleu = 0.0;  // across groups with >= 2 texts
  double std_pairwise_bleu = 0.0;
  std::size_t bleu_groups = 0;
};

// Mean BLEU over ordered pairs (i != j) of one group.
double group_pairwise_bleu(std::span<const std::string> texts, const BleuOptions& options = {});

CorpusStats corpus_stats(const std::vector<std::vector<std::string>>& groups,
                         const BleuOptions& options = {});
std::string corpus_stats_json(const CorpusStats& stats, std::optional<ParseReport> totals = {});

// ------------------------------------------------------------------ judge

struct JudgePrompt {
  std::string system;
  std::string user;
};

JudgePrompt render_judge_prompt(const std::string& product_name, const std::string& category,
                                const std::string& review);

struct JudgeScores {
  std::array<std::optional<int>, 5> scores;
  std::size_t found() const;
};

// First integer in 0..5 of each of the first five scored answer blocks;
// missing blocks stay empty.
JudgeScores parse_judge_scores(std::string_view reply);

}  // namespace spamgraph
