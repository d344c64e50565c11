#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spamgraph {

std::vector<std::string> whitespace_tokens(std::string_view text);

struct BleuOptions {
  int max_order = 4;
  // Add-one smoothing of every n-gram precision. Off means any zero
  // precision makes the score 0.
  bool smoothing = false;
};

// Sentence BLEU of a candidate against a single reference:
// BP * exp(mean_n log p_n), with clipped n-gram precisions p_n and brevity
// penalty BP = min(1, exp(1 - r/c)).
double sentence_bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                     const BleuOptions& options = {});
double sentence_bleu(std::string_view candidate, std::string_view reference,
                     const BleuOptions& options = {});

}  // namespace spamgraph
