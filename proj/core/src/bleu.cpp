#include "topicap/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "topicap/errors.hpp"

namespace topicap {

namespace {

using NgramCounts = std::map<std::vector<std::string>, long>;

NgramCounts ngrams(const Sentence& s, std::size_t n) {
  NgramCounts out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++out[std::vector<std::string>(s.begin() + static_cast<std::ptrdiff_t>(i),
                                   s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

}  // namespace

BleuReport bleu4(const std::vector<Sentence>& candidates, const std::vector<std::vector<Sentence>>& references) {
  if (candidates.size() != references.size()) {
    throw ContractError("bleu4: " + std::to_string(candidates.size()) + " candidates but " +
                        std::to_string(references.size()) + " reference sets");
  }
  BleuReport r;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& cand = candidates[k];
    const auto& refs = references[k];
    if (refs.empty()) throw ContractError("bleu4: empty reference set for candidate " + std::to_string(k));

    const long c = static_cast<long>(cand.size());
    long best = static_cast<long>(refs.front().size());
    for (const auto& ref : refs) {
      const long len = static_cast<long>(ref.size());
      const long d = std::labs(len - c), bd = std::labs(best - c);
      if (d < bd || (d == bd && len < best)) best = len;
    }
    r.candidate_length += c;
    r.reference_length += best;

    for (std::size_t n = 1; n <= 4; ++n) {
      const auto cand_counts = ngrams(cand, n);
      NgramCounts max_ref;
      for (const auto& ref : refs) {
        for (const auto& [g, cnt] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], cnt);
      }
      for (const auto& [g, cnt] : cand_counts) {
        r.totals[n - 1] += cnt;
        auto it = max_ref.find(g);
        if (it != max_ref.end()) r.matches[n - 1] += std::min(cnt, it->second);
      }
    }
  }

  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    r.precisions[n] = r.totals[n] > 0 ? static_cast<double>(r.matches[n]) / static_cast<double>(r.totals[n]) : 0.0;
    const double p = r.matches[n] > 0 ? r.precisions[n] : 1.0 / (2.0 * static_cast<double>(std::max(r.totals[n], 1L)));
    log_sum += 0.25 * std::log(p);
  }
  if (r.candidate_length == 0) {
    r.brevity_penalty = 0.0;
    r.bleu = 0.0;
    return r;
  }
  r.brevity_penalty = r.candidate_length > r.reference_length
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(r.reference_length) /
                                               static_cast<double>(r.candidate_length));
  r.bleu = r.brevity_penalty * std::exp(log_sum);
  return r;
}

}  // namespace topicap
