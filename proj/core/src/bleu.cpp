#include "spamgraph/bleu.hpp"

#include <cctype>
#include <cmath>
#include <map>

#include "spamgraph/error.hpp"

namespace spamgraph {

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

namespace {

using NGram = std::vector<std::string_view>;

std::map<NGram, int> ngram_counts(std::span<const std::string> tokens, std::size_t order) {
  std::map<NGram, int> counts;
  if (tokens.size() < order) return counts;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    NGram g;
    g.reserve(order);
    for (std::size_t k = 0; k < order; ++k) g.emplace_back(tokens[i + k]);
    ++counts[g];
  }
  return counts;
}

}  // namespace

double sentence_bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                     const BleuOptions& options) {
  if (options.max_order < 1) throw InvalidArgument("BLEU order must be at least 1");
  if (candidate.empty()) return 0.0;
  double log_precision_sum = 0.0;
  for (int n = 1; n <= options.max_order; ++n) {
    const auto order = static_cast<std::size_t>(n);
    const auto cand = ngram_counts(candidate, order);
    const auto ref = ngram_counts(reference, order);
    double matched = 0.0;
    double total = 0.0;
    for (const auto& [gram, count] : cand) {
      total += count;
      if (auto it = ref.find(gram); it != ref.end()) matched += std::min(count, it->second);
    }
    if (options.smoothing) {
      matched += 1.0;
      total += 1.0;
    }
    if (matched == 0.0 || total == 0.0) return 0.0;
    log_precision_sum += std::log(matched / total);
  }
  const auto c = static_cast<double>(candidate.size());
  const auto r = static_cast<double>(reference.size());
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return brevity * std::exp(log_precision_sum / options.max_order);
}

double sentence_bleu(std::string_view candidate, std::string_view reference,
                     const BleuOptions& options) {
  const auto c = whitespace_tokens(candidate);
  const auto r = whitespace_tokens(reference);
  return sentence_bleu(c, r, options);
}

}  // namespace spamgraph
