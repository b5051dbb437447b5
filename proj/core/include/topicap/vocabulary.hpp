#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace topicap {

// Bidirectional word <-> index table. Indices follow insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  int add(const std::string& word);  // returns the existing index if present
  std::optional<int> find(const std::string& word) const;
  int index(const std::string& word) const;  // VocabularyError when absent
  const std::string& word(int index) const;
  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

std::uint64_t fnv1a64(const std::string& s);

}  // namespace topicap
