#include "spamgraph/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <regex>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "spamgraph/error.hpp"
#include "spamgraph/rng.hpp"

namespace spamgraph {

using nlohmann::json;
using nlohmann::ordered_json;

// ------------------------------------------------------------------ targets

std::map<std::string, ProductRatingSummary> product_rating_summary(
    std::span<const ReviewRecord> records) {
  std::map<std::string, ProductRatingSummary> out;
  std::map<std::string, long long> sums;
  for (const auto& r : records) {
    ++out[r.product_id].reviews;
    sums[r.product_id] += r.rating;
  }
  for (auto& [id, summary] : out) {
    summary.mean_rating = static_cast<double>(sums[id]) / static_cast<double>(summary.reviews);
  }
  return out;
}

std::vector<std::string> select_target_products(std::span<const ReviewRecord> records,
                                                double threshold, std::size_t count,
                                                std::uint64_t seed) {
  if (records.empty()) throw InvalidArgument("target selection: corpus is empty");
  std::vector<std::string> eligible;
  for (const auto& [id, summary] : product_rating_summary(records)) {
    if (summary.mean_rating < threshold) eligible.push_back(id);
  }
  if (eligible.empty()) {
    throw InvalidArgument("target selection: no product has a mean rating below " +
                          std::to_string(threshold));
  }
  Rng rng(seed);
  rng.shuffle(eligible.begin(), eligible.end());
  if (eligible.size() > count) eligible.resize(count);
  return eligible;
}

const ReviewRecord& first_review_of(std::span<const ReviewRecord> records,
                                    const std::string& product_id) {
  const ReviewRecord* best = nullptr;
  for (const auto& r : records) {
    if (r.product_id != product_id) continue;
    if (!best || r.timestamp < best->timestamp ||
        (r.timestamp == best->timestamp && r.review_id < best->review_id)) {
      best = &r;
    }
  }
  if (!best) throw InvalidArgument("product '" + product_id + "' has no reviews in the corpus");
  return *best;
}

// --------------------------------------------------------------- generation

std::string to_string(Sentiment s) { return s == Sentiment::positive ? "positive" : "negative"; }

Sentiment parse_sentiment(const std::string& s) {
  if (s == "positive") return Sentiment::positive;
  if (s == "negative") return Sentiment::negative;
  throw InvalidArgument("unknown sentiment '" + s + "'");
}

void GenerationRequest::validate() const {
  if (review_number < 1) throw InvalidArgument("generation: review_number must be at least 1");
  if (max_words < 10) throw InvalidArgument("generation: max_words must be at least 10");
}

std::string render_generation_prompt(const GenerationRequest& request) {
  request.validate();
  std::string references;
  for (std::size_t i = 0; i < request.reference_reviews.size(); ++i) {
    if (i > 0) references += "\n\n";
    references += request.reference_reviews[i];
  }
  std::string prompt;
  prompt += "I need your help to write reviews for a product " + request.product_name +
            " on Amazon in the category of " + request.product_category + ". ";
  prompt += "The official description of the product given by the store is as follows:\n";
  prompt += request.product_description + "\n";
  prompt += "Besides, I will give you a set of review of this product for reference:\n";
  prompt += references + "\n";
  prompt += "Now, please output " + std::to_string(request.review_number) + " " +
            to_string(request.sentiment) + " reviews. Each review contains no more than " +
            std::to_string(request.max_words) +
            " words. Please write diversified reviews as if they were written by different "
            "customers, for example, with different lengths and styles. Start with another "
            "paragraph for each review and begin with Review 1. 2. 3., etc.";
  return prompt;
}

HttpChatClient::HttpChatClient(std::string endpoint, std::string api_key, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), retry_(retry) {}

HttpChatClient HttpChatClient::from_env(std::string endpoint, RetryPolicy retry) {
  const char* key = std::getenv("CHAT_API_KEY");
  return HttpChatClient(std::move(endpoint), key ? key : "", retry);
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  json request;
  request["messages"] = json::array();
  for (const auto& m : messages) {
    request["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  const auto body = post_json_with_retry(endpoint_, request.dump(), api_key_, retry_);
  try {
    return json::parse(body).at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ServiceError(std::string("chat service returned malformed JSON: ") + e.what());
  }
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct PhrasePools {
  std::vector<std::string_view> openers;
  std::vector<std::string_view> verdicts;
  std::vector<std::string_view> details;
  std::vector<std::string_view> closers;
};

const PhrasePools& positive_pools() {
  static const PhrasePools pools{
      {"I was skeptical at first, but", "Honestly,", "After a few weeks of use,",
       "What a pleasant surprise:", "I bought this on a whim and", "My sister recommended it and",
       "Long story short,", "I rarely write reviews, but", "As a busy parent,",
       "Coming from a cheaper brand,"},
      {"works exactly as described", "exceeded my expectations", "feels sturdy and well made",
       "was a breeze to set up", "has become part of my daily routine", "is worth every penny",
       "arrived quickly and well packaged", "performs better than pricier alternatives",
       "does everything I hoped for", "turned out to be a real game changer"},
      {"The build quality is solid.", "Setup took less than ten minutes.",
       "Customer service answered my question within a day.", "It looks great in my kitchen.",
       "The instructions were clear and simple.", "Battery life has been impressive so far.",
       "My kids love it too.", "It holds up well after daily use.",
       "The design is sleek and modern.", "Cleaning it is quick and painless.",
       "It fits perfectly in the space I had.", "The price felt more than fair.",
       "I noticed a difference from the very first day.", "Even my picky roommate approves."},
      {"Highly recommend!", "A must-have for anyone on the fence.",
       "Would buy again without hesitation.", "Five stars from me.",
       "Absolutely thrilled with my purchase.", "You will not regret it.",
       "Cannot recommend it enough.", "Worth a try for sure."}};
  return pools;
}

const PhrasePools& negative_pools() {
  static const PhrasePools pools{
      {"I wanted to like this, but", "Sadly,", "After a week of use,", "Be warned:",
       "I had high hopes and", "Unfortunately,"},
      {"fell apart quickly", "did not work as described", "feels cheap and flimsy",
       "was a pain to set up", "stopped working after a few days", "is not worth the money"},
      {"The build quality is poor.", "Setup took far too long.",
       "Customer service never replied.", "The instructions were confusing.",
       "Battery life is disappointing.", "It broke after light use.",
       "The smell never went away.", "It does not fit as advertised."},
      {"Save your money.", "I would not buy it again.", "Two thumbs down.",
       "Look elsewhere.", "Returning it tomorrow."}};
  return pools;
}

template <class Pool>
std::string_view pick(const Pool& pool, Rng& rng) {
  return pool[rng.below(pool.size())];
}

struct StubPromptInfo {
  std::size_t count = 0;
  Sentiment sentiment = Sentiment::positive;
  std::string product;
};

std::optional<StubPromptInfo> read_prompt(const std::string& prompt) {
  static const std::regex count_re(R"(please output (\d+) (positive|negative) reviews)");
  static const std::regex product_re(R"(for a product (.*?) on Amazon in the category of)");
  std::smatch m;
  if (!std::regex_search(prompt, m, count_re)) return std::nullopt;
  StubPromptInfo info;
  info.count = static_cast<std::size_t>(std::stoul(m[1].str()));
  info.sentiment = parse_sentiment(m[2].str());
  info.product = std::regex_search(prompt, m, product_re) ? m[1].str() : "this product";
  return info;
}

}  // namespace

std::vector<std::string> StubChatClient::reviews_for(const std::string& prompt) const {
  const auto info = read_prompt(prompt);
  if (!info) return {};
  const auto& pools = info->sentiment == Sentiment::positive ? positive_pools() : negative_pools();
  Rng rng(derive_seed(seed_, fnv1a(prompt)));
  std::vector<std::string> out;
  for (std::size_t k = 0; k < info->count; ++k) {
    std::string text;
    text += pick(pools.openers, rng);
    text += rng.below(2) == 0 ? " the " + info->product : std::string(" this product");
    text += " ";
    text += pick(pools.verdicts, rng);
    text += ".";
    const auto n_details = 1 + rng.below(4);
    for (std::uint64_t d = 0; d < n_details; ++d) {
      text += " ";
      text += pick(pools.details, rng);
    }
    text += " ";
    text += pick(pools.closers, rng);
    out.push_back(std::move(text));
  }
  return out;
}

std::string StubChatClient::complete(const std::vector<ChatMessage>& messages) {
  std::string prompt;
  for (const auto& m : messages) {
    if (m.role == "user") prompt = m.content;
  }
  const auto reviews = reviews_for(prompt);
  if (reviews.empty()) return "I can help with that.";
  Rng rng(derive_seed(seed_, fnv1a(prompt) ^ 0x5eedULL));
  std::string out;
  if (rng.below(2) == 0) {
    const auto info = read_prompt(prompt);
    out += "Here are " + std::to_string(reviews.size()) + " " + to_string(info->sentiment) +
           " reviews for " + info->product + ":\n\n";
  }
  const bool bold = rng.below(4) == 0;
  const char* separator = rng.below(3) == 0 ? "\n" : "\n\n";
  for (std::size_t k = 0; k < reviews.size(); ++k) {
    if (k > 0) out += separator;
    const auto marker = "Review " + std::to_string(k + 1) + ".";
    out += bold ? "**" + marker + "** " : marker + " ";
    out += reviews[k];
  }
  return out;
}

std::string generate_reviews(const GenerationRequest& request, ChatClient& client) {
  return client.complete({{"user", render_generation_prompt(request)}});
}

namespace {

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool iequals_prefix(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

// Returns the rest of the line after a leading review marker, or nullopt.
std::optional<std::string_view> strip_review_marker(std::string_view line) {
  auto s = line;
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.front())) || s.front() == '*' ||
                        s.front() == '#' || s.front() == '_')) {
    s.remove_prefix(1);
  }
  bool named = false;
  if (iequals_prefix(s, "review")) {
    named = true;
    s.remove_prefix(6);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  }
  std::size_t digits = 0;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits == 0 || digits > 4) return std::nullopt;
  s.remove_prefix(digits);
  if (s.empty()) return std::nullopt;
  const char punct = s.front();
  const bool ok = punct == '.' || punct == ')' || (named && punct == ':');
  if (!ok) return std::nullopt;
  s.remove_prefix(1);
  // Bare "3.5 stars" is a number, not a marker.
  if (!named && !s.empty() && std::isdigit(static_cast<unsigned char>(s.front()))) {
    return std::nullopt;
  }
  while (!s.empty() && (s.front() == '*' || s.front() == '_' ||
                        std::isspace(static_cast<unsigned char>(s.front())))) {
    s.remove_prefix(1);
  }
  return s;
}

}  // namespace

ParsedReviews parse_reviews(std::string_view completion, std::size_t expected) {
  ParsedReviews out;
  out.report.expected = expected;
  std::vector<std::string> current;
  bool open = false;
  auto close = [&] {
    if (!open) return;
    std::string text;
    for (const auto& piece : current) {
      const auto t = trim_view(piece);
      if (t.empty()) continue;
      if (!text.empty()) text += ' ';
      text += t;
    }
    while (text.size() >= 2 && text.ends_with("**")) text.resize(text.size() - 2);
    if (!trim_view(text).empty()) out.reviews.emplace_back(trim_view(text));
    current.clear();
    open = false;
  };

  std::size_t pos = 0;
  while (pos <= completion.size()) {
    auto end = completion.find('\n', pos);
    if (end == std::string_view::npos) end = completion.size();
    auto line = completion.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (auto rest = strip_review_marker(line)) {
      close();
      open = true;
      current.emplace_back(*rest);
    } else if (open) {
      current.emplace_back(line);
    }
    pos = end + 1;
  }
  close();
  out.report.parsed = out.reviews.size();
  return out;
}

// ---------------------------------------------------------------- injection

std::vector<std::vector<std::string>> assign_compromised_users(
    std::span<const ReviewRecord> records, std::size_t n_products,
    std::size_t reviews_per_product, std::uint64_t seed) {
  if (reviews_per_product == 0) throw InvalidArgument("reviews per product must be positive");
  const std::size_t users_per_product = (reviews_per_product + 1) / 2;
  const std::size_t needed = users_per_product * n_products;

  std::map<std::string, std::size_t> activity;
  for (const auto& r : records) ++activity[r.user_id];
  if (activity.size() < needed) {
    throw InvalidArgument("need " + std::to_string(needed) + " distinct users, corpus has " +
                          std::to_string(activity.size()));
  }

  // Weighted sampling without replacement (Efraimidis-Spirakis): each user
  // draws key log(u) / weight and the largest keys win. Equivalent to
  // drawing users one at a time proportionally to their remaining weight.
  Rng rng(seed);
  std::vector<std::pair<double, const std::string*>> keyed;
  keyed.reserve(activity.size());
  for (const auto& [user, count] : activity) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    keyed.emplace_back(std::log(u) / static_cast<double>(count), &user);
  }
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(needed), keyed.end(),
                    [](const auto& a, const auto& b) {
                      return a.first > b.first || (a.first == b.first && *a.second < *b.second);
                    });

  std::vector<std::vector<std::string>> out(n_products);
  for (std::size_t p = 0; p < n_products; ++p) {
    for (std::size_t k = 0; k < reviews_per_product; ++k) {
      out[p].push_back(*keyed[p * users_per_product + k / 2].second);
    }
  }
  return out;
}

SynthesisPlan make_synthesis_plan(std::span<const ReviewRecord> records, const PlanOptions& options) {
  SynthesisPlan plan;
  plan.seed = options.seed;
  plan.reviews_per_product = options.reviews_per_product;
  plan.max_words = options.max_words;
  plan.sentiment = options.sentiment;
  const auto targets = select_target_products(records, options.rating_threshold,
                                              options.target_count, derive_seed(options.seed, 1));
  const auto users = assign_compromised_users(records, targets.size(), options.reviews_per_product,
                                              derive_seed(options.seed, 2));
  for (std::size_t p = 0; p < targets.size(); ++p) {
    TargetPlan t;
    t.product_id = targets[p];
    t.reference_review = first_review_of(records, targets[p]).text;
    t.user_ids = users[p];
    t.rating = options.sentiment == Sentiment::positive ? 5 : 1;
    plan.targets.push_back(std::move(t));
  }
  return plan;
}

GenerationRequest generation_request_for(const SynthesisPlan& plan, const TargetPlan& target,
                                         const ProductMetadata* metadata) {
  GenerationRequest req;
  req.product_name = metadata && !metadata->name.empty() ? metadata->name : target.product_id;
  req.product_category = metadata && !metadata->category.empty() ? metadata->category : "General";
  req.product_description = metadata ? metadata->description : std::string{};
  if (!target.reference_review.empty()) req.reference_reviews.push_back(target.reference_review);
  req.review_number = std::max<std::size_t>(1, target.user_ids.size());
  req.sentiment = plan.sentiment;
  req.max_words = plan.max_words;
  return req;
}

std::vector<GenerationOutcome> fill_plan_texts(
    SynthesisPlan& plan, ChatClient& client,
    const std::map<std::string, ProductMetadata>& metadata, std::size_t max_concurrency) {
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < plan.targets.size(); ++i) {
    if (plan.targets[i].texts.empty()) pending.push_back(i);
  }
  std::vector<GenerationOutcome> outcomes;
  const std::size_t wave = std::max<std::size_t>(1, max_concurrency);
  for (std::size_t first = 0; first < pending.size(); first += wave) {
    const std::size_t last = std::min(pending.size(), first + wave);
    std::vector<std::future<std::string>> replies;
    for (std::size_t k = first; k < last; ++k) {
      const auto& target = plan.targets[pending[k]];
      const auto it = metadata.find(target.product_id);
      const auto request =
          generation_request_for(plan, target, it == metadata.end() ? nullptr : &it->second);
      replies.push_back(std::async(wave == 1 ? std::launch::deferred : std::launch::async,
                                   [&client, request] { return generate_reviews(request, client); }));
    }
    for (std::size_t k = first; k < last; ++k) {
      auto& target = plan.targets[pending[k]];
      auto parsed = parse_reviews(replies[k - first].get(), target.user_ids.size());
      if (parsed.reviews.size() > target.user_ids.size()) {
        parsed.reviews.resize(target.user_ids.size());
      }
      target.user_ids.resize(parsed.reviews.size());
      target.texts = std::move(parsed.reviews);
      outcomes.push_back({target.product_id, parsed.report});
    }
  }
  return outcomes;
}

std::vector<ReviewRecord> inject_spam(std::span<const ReviewRecord> records,
                                      const SynthesisPlan& plan, std::uint64_t seed) {
  std::vector<ReviewRecord> out(records.begin(), records.end());
  std::unordered_map<std::string, std::int64_t> first_time;
  for (auto& r : out) {
    r.label = Label::normal;
    auto [it, inserted] = first_time.emplace(r.product_id, r.timestamp);
    if (!inserted) it->second = std::min(it->second, r.timestamp);
  }
  Rng rng(seed);
  for (const auto& target : plan.targets) {
    const auto it = first_time.find(target.product_id);
    if (it == first_time.end()) {
      throw InvalidArgument("injection target '" + target.product_id + "' is not in the corpus");
    }
    if (target.texts.size() != target.user_ids.size()) {
      throw InvalidArgument("injection target '" + target.product_id + "' has " +
                            std::to_string(target.texts.size()) + " texts for " +
                            std::to_string(target.user_ids.size()) + " users");
    }
    if (!target.timestamps.empty() && target.timestamps.size() != target.texts.size()) {
      throw InvalidArgument("injection target '" + target.product_id +
                            "' has a timestamp count that does not match its texts");
    }
    if (target.rating < 1 || target.rating > 5) throw InvalidArgument("injection rating out of range");
    const std::int64_t t0 = it->second;
    for (std::size_t k = 0; k < target.texts.size(); ++k) {
      ReviewRecord r;
      r.review_id = out.size();
      r.user_id = target.user_ids[k];
      r.product_id = target.product_id;
      r.rating = target.rating;
      if (target.timestamps.empty()) {
        r.timestamp = rng.between(t0, t0 + kInjectionWindowSeconds);
      } else {
        r.timestamp = target.timestamps[k];
        if (r.timestamp < t0 || r.timestamp > t0 + kInjectionWindowSeconds) {
          throw InvalidArgument("planned timestamp outside the injection window for '" +
                                target.product_id + "'");
        }
      }
      r.text = target.texts[k];
      r.label = Label::spam;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::string plan_to_json(const SynthesisPlan& plan) {
  ordered_json obj;
  obj["seed"] = plan.seed;
  obj["reviews_per_product"] = plan.reviews_per_product;
  obj["max_words"] = plan.max_words;
  obj["sentiment"] = to_string(plan.sentiment);
  obj["targets"] = ordered_json::array();
  for (const auto& t : plan.targets) {
    ordered_json tj;
    tj["product_id"] = t.product_id;
    tj["rating"] = t.rating;
    tj["reference_review"] = t.reference_review;
    tj["user_ids"] = t.user_ids;
    tj["texts"] = t.texts;
    tj["timestamps"] = t.timestamps;
    obj["targets"].push_back(std::move(tj));
  }
  return obj.dump(2, ' ', false, json::error_handler_t::replace);
}

SynthesisPlan plan_from_json(const std::string& text) {
  try {
    const auto obj = json::parse(text);
    SynthesisPlan plan;
    plan.seed = obj.at("seed").get<std::uint64_t>();
    plan.reviews_per_product = obj.at("reviews_per_product").get<std::size_t>();
    plan.max_words = obj.at("max_words").get<std::size_t>();
    plan.sentiment = parse_sentiment(obj.value("sentiment", std::string("positive")));
    for (const auto& tj : obj.at("targets")) {
      TargetPlan t;
      t.product_id = tj.at("product_id").get<std::string>();
      t.rating = tj.value("rating", 5);
      t.reference_review = tj.value("reference_review", std::string{});
      t.user_ids = tj.at("user_ids").get<std::vector<std::string>>();
      t.texts = tj.value("texts", std::vector<std::string>{});
      t.timestamps = tj.value("timestamps", std::vector<std::int64_t>{});
      plan.targets.push_back(std::move(t));
    }
    return plan;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid synthesis plan: ") + e.what());
  }
}

void save_plan(const std::filesystem::path& path, const SynthesisPlan& plan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << plan_to_json(plan) << '\n';
}

SynthesisPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return plan_from_json(ss.str());
}

// --------------------------------------------------------------- statistics

double group_pairwise_bleu(std::span<const std::string> texts, const BleuOptions& options) {
  if (texts.size() < 2) return 0.0;
  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(texts.size());
  for (const auto& t : texts) tokens.push_back(whitespace_tokens(t));
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      if (i == j) continue;
      total += sentence_bleu(tokens[i], tokens[j], options);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

}  // namespace

CorpusStats corpus_stats(const std::vector<std::vector<std::string>>& groups,
                         const BleuOptions& options) {
  CorpusStats s;
  std::vector<double> words;
  std::vector<double> bleus;
  for (const auto& group : groups) {
    for (const auto& text : group) {
      const auto n = whitespace_tokens(text).size();
      words.push_back(static_cast<double>(n));
      s.max_words = std::max(s.max_words, n);
    }
    if (group.size() >= 2) bleus.push_back(group_pairwise_bleu(group, options));
  }
  s.texts = words.size();
  std::tie(s.mean_words, s.std_words) = mean_std(words);
  std::tie(s.mean_pairwise_bleu, s.std_pairwise_bleu) = mean_std(bleus);
  s.bleu_groups = bleus.size();
  return s;
}

std::string corpus_stats_json(const CorpusStats& s, std::optional<ParseReport> totals) {
  ordered_json obj;
  if (totals) {
    obj["outputted"] = totals->parsed;
    obj["required"] = totals->expected;
  }
  obj["texts"] = s.texts;
  obj["max_words"] = s.max_words;
  obj["mean_words"] = s.mean_words;
  obj["std_words"] = s.std_words;
  obj["mean_pairwise_bleu"] = s.mean_pairwise_bleu;
  obj["std_pairwise_bleu"] = s.std_pairwise_bleu;
  obj["bleu_groups"] = s.bleu_groups;
  return obj.dump(2);
}

// -------------------------------------------------------------------- judge

JudgePrompt render_judge_prompt(const std::string& product_name, const std::string& category,
                                const std::string& review) {
  JudgePrompt p;
  p.system =
      "You are a helpful assistant and know a lot about e-commerce on Amazon, especially about "
      "how the reviews influence potential customers.";
  p.user = "Please first read a review about the product titled " + product_name +
           " in the category of " + category + ":\n" + review +
           "\nNow, please evaluate the influence of the given review on a potential customer on "
           "Amazon in the following five aspects:\n"
           "- Will the user feel the review is positive?\n"
           "- Will the user feel the review contains useful details?\n"
           "- Will the user feel the review is convincing?\n"
           "- Will the user feel the review is written by a normal user?\n"
           "- Will the user be more willing to buy the product after reading the review?\n"
           "For each question, please first answer with a rating ranging from 1 (totally no) to "
           "5 (totally yes) and then give a brief reason for the rating.";
  return p;
}

std::size_t JudgeScores::found() const {
  return static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(), [](const auto& s) { return s.has_value(); }));
}

namespace {

// Length of a leading list marker ("-", "*", "1.", "2)", "#"), 0 if none.
std::size_t list_marker_length(std::string_view s) {
  if (s.empty()) return 0;
  if (s.front() == '-' || s.front() == '*' || s.front() == '#') {
    std::size_t k = 0;
    while (k < s.size() && (s[k] == '-' || s[k] == '*' || s[k] == '#')) ++k;
    return k;
  }
  std::size_t digits = 0;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) {
    // "4." followed by a digit is a decimal, not a marker.
    if (digits + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[digits + 1]))) return 0;
    return digits + 1;
  }
  return 0;
}

// First standalone integer in [0, 5].
std::optional<int> first_score(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) continue;
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(s[i - 1]));
    const bool decimal = j + 1 < s.size() && s[j] == '.' &&
                         std::isdigit(static_cast<unsigned char>(s[j + 1]));
    if (left_ok && !decimal && j - i == 1 && s[i] <= '5') return s[i] - '0';
    i = j;
  }
  return std::nullopt;
}

}  // namespace

JudgeScores parse_judge_scores(std::string_view reply) {
  // Blocks start at a list marker or after a blank line.
  std::vector<std::string> blocks;
  bool fresh = true;
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    auto end = reply.find('\n', pos);
    if (end == std::string_view::npos) end = reply.size();
    const auto line = trim_view(reply.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) {
      fresh = true;
      continue;
    }
    const auto marker = list_marker_length(line);
    if (marker > 0 || fresh) {
      blocks.emplace_back(line.substr(marker));
    } else {
      blocks.back() += ' ';
      blocks.back() += line;
    }
    fresh = false;
  }
  JudgeScores out;
  std::size_t slot = 0;
  for (const auto& block : blocks) {
    if (slot == out.scores.size()) break;
    if (auto score = first_score(block)) out.scores[slot++] = *score;
  }
  return out;
}

}  // namespace spamgraph
