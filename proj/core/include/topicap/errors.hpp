#pragma once

#include <stdexcept>
#include <string>

namespace topicap {

// Shapes that do not line up. Messages name the offending shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller broke an operation's precondition (non-scalar loss, empty sequence, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VocabularyError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnrefinableTopicError : public std::runtime_error {
 public:
  UnrefinableTopicError(int topic, const std::string& what)
      : std::runtime_error(what), topic_(topic) {}
  int topic() const noexcept { return topic_; }

 private:
  int topic_;
};

}  // namespace topicap
