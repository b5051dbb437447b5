#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicap/corpus.hpp"
#include "topicap/vocabulary.hpp"

namespace topicap {

// Function words dropped before topic modelling.
const std::set<std::string>& default_stopwords();

// One document per video: the concatenation of all its descriptions.
struct LdaCorpus {
  Vocabulary vocabulary;
  std::vector<std::string> doc_ids;
  std::vector<std::vector<int>> documents;
};

// Builds the corpus over videos of `split`, growing the vocabulary from them.
LdaCorpus build_corpus(const Dataset& dataset, Split split,
                       const std::set<std::string>& stopwords = default_stopwords());

// Maps a video's descriptions onto an existing vocabulary; unknown words and
// stopwords are dropped.
std::vector<int> document_tokens(const SyntheticVideo& video, const Vocabulary& vocabulary,
                                 const std::set<std::string>& stopwords = default_stopwords());

struct LdaConfig {
  int num_topics = 10;
  double alpha = -1.0;  // < 0 selects 50 / num_topics
  double beta = 0.01;
  int sweeps = 200;
  std::uint64_t seed = 1;

  double resolved_alpha() const { return alpha < 0 ? 50.0 / num_topics : alpha; }
};

struct TopicModel {
  int num_topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;  // fit seed; also seeds topic-vector inference downstream
  Vocabulary vocabulary;
  std::vector<std::vector<long>> topic_word;  // N_t x V
  std::vector<long> topic_totals;             // N_t
  // Training state; not serialized.
  std::vector<std::vector<long>> doc_topic;   // D x N_t
  std::vector<std::vector<int>> assignments;  // per-document token topics

  // log-free smoothed word probability (n_kw + beta) / (n_k + V beta)
  double word_probability(int topic, int word) const;
};

TopicModel fit(const LdaCorpus& corpus, const LdaConfig& config);

// Rebuilds counts from assignments and compares with the stored matrices.
bool counts_consistent(const TopicModel& model, const LdaCorpus& corpus);

struct WordProbability {
  std::string word;
  double probability = 0.0;
};
std::vector<WordProbability> top_words(const TopicModel& model, int topic, int k);

struct TopicInferenceConfig {
  double threshold = -1.0;  // < 0 selects 1 / (2 N_t)
  int burn_in = 50;
  int samples = 20;
};

struct TopicVector {
  std::vector<int> bits;          // in {0,1}
  std::vector<double> fractions;  // posterior-mean share of tokens per topic
  bool empty_document = false;
};

// Gibbs inference with the model's topic-word counts held fixed.
TopicVector topic_vector(const TopicModel& model, const std::vector<int>& document,
                         const TopicInferenceConfig& config, std::uint64_t seed);

// Topic vectors for every video, each seeded from the run seed and the video id
// so results do not depend on video order.
std::vector<std::pair<std::string, TopicVector>> topic_vectors(
    const TopicModel& model, const Dataset& dataset, const TopicInferenceConfig& config,
    std::uint64_t seed);

nlohmann::json to_json(const TopicModel& model);
TopicModel topic_model_from_json(const nlohmann::json& j);

nlohmann::json topic_vectors_to_json(const std::vector<std::pair<std::string, TopicVector>>& vectors);
std::vector<std::pair<std::string, TopicVector>> topic_vectors_from_json(const nlohmann::json& j);

}  // namespace topicap
