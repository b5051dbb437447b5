#pragma once

#include <array>
#include <string>
#include <vector>

namespace topicap {

using Sentence = std::vector<std::string>;

struct BleuReport {
  double bleu = 0.0;
  std::array<double, 4> precisions{};  // clipped, before smoothing
  std::array<long, 4> matches{};
  std::array<long, 4> totals{};
  double brevity_penalty = 0.0;
  long candidate_length = 0;
  long reference_length = 0;
};

// Corpus-level BLEU-4 with uniform weights. Clipped n-gram counts are summed
// over the corpus; a zero precision p_n is replaced by 1 / (2 * total
// candidate n-grams of order n) before taking logs. The brevity penalty uses
// the closest reference length per candidate, shorter on ties.
BleuReport bleu4(const std::vector<Sentence>& candidates, const std::vector<std::vector<Sentence>>& references);

}  // namespace topicap
