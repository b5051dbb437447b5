#include "topicap/vocabulary.hpp"

#include "topicap/errors.hpp"

namespace topicap {

Vocabulary::Vocabulary(std::vector<std::string> words) {
  for (const auto& w : words) add(w);
}

int Vocabulary::add(const std::string& word) {
  auto [it, inserted] = index_.try_emplace(word, static_cast<int>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

std::optional<int> Vocabulary::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::index(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) throw VocabularyError("word '" + word + "' is not in the vocabulary");
  return it->second;
}

const std::string& Vocabulary::word(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= words_.size()) {
    throw VocabularyError("token index " + std::to_string(index) + " outside vocabulary of size " +
                          std::to_string(words_.size()));
  }
  return words_[static_cast<std::size_t>(index)];
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace topicap
