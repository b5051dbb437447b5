#include "topicap/lda.hpp"

#include <algorithm>
#include <random>

#include "topicap/errors.hpp"

namespace topicap {

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {"a",  "an",   "the", "is",   "are", "in", "on",
                                              "at", "with", "and", "of",   "to",  "by", "it"};
  return words;
}

LdaCorpus build_corpus(const Dataset& dataset, Split split, const std::set<std::string>& stopwords) {
  LdaCorpus corpus;
  for (const auto* video : dataset.split(split)) {
    std::vector<int> doc;
    for (const auto& sentence : video->descriptions) {
      for (const auto& tok : tokenize(sentence, false)) {
        if (stopwords.count(tok)) continue;
        doc.push_back(corpus.vocabulary.add(tok));
      }
    }
    corpus.doc_ids.push_back(video->id);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

std::vector<int> document_tokens(const SyntheticVideo& video, const Vocabulary& vocabulary,
                                 const std::set<std::string>& stopwords) {
  std::vector<int> doc;
  for (const auto& sentence : video.descriptions) {
    for (const auto& tok : tokenize(sentence, false)) {
      if (stopwords.count(tok)) continue;
      if (auto idx = vocabulary.find(tok)) doc.push_back(*idx);
    }
  }
  return doc;
}

double TopicModel::word_probability(int topic, int word) const {
  const double v = static_cast<double>(vocabulary.size());
  return (static_cast<double>(topic_word[topic][word]) + beta) /
         (static_cast<double>(topic_totals[topic]) + v * beta);
}

namespace {

int sample_index(std::vector<double>& weights, std::mt19937_64& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::uniform_real_distribution<double> unit(0.0, total);
  double u = unit(rng);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace

TopicModel fit(const LdaCorpus& corpus, const LdaConfig& config) {
  if (corpus.documents.empty()) throw ConfigError("lda fit: corpus has no documents");
  if (corpus.vocabulary.size() == 0) throw ConfigError("lda fit: corpus vocabulary is empty");
  if (config.num_topics < 1) throw ConfigError("lda fit: num_topics must be >= 1");
  if (config.sweeps < 1) throw ConfigError("lda fit: sweeps must be >= 1");
  if (config.beta <= 0) throw ConfigError("lda fit: beta must be positive");

  const int kt = config.num_topics;
  const std::size_t vsize = corpus.vocabulary.size();
  TopicModel m;
  m.num_topics = kt;
  m.alpha = config.resolved_alpha();
  m.beta = config.beta;
  m.seed = config.seed;
  m.vocabulary = corpus.vocabulary;
  m.topic_word.assign(kt, std::vector<long>(vsize, 0));
  m.topic_totals.assign(kt, 0);
  m.doc_topic.assign(corpus.documents.size(), std::vector<long>(kt, 0));
  m.assignments.resize(corpus.documents.size());

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> initial(0, kt - 1);
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    for (int w : corpus.documents[d]) {
      const int z = initial(rng);
      m.assignments[d].push_back(z);
      ++m.topic_word[z][w];
      ++m.topic_totals[z];
      ++m.doc_topic[d][z];
    }
  }

  const double vbeta = static_cast<double>(vsize) * m.beta;
  std::vector<double> weights(kt);
  for (int sweep = 0; sweep < config.sweeps; ++sweep) {
    for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
      const auto& doc = corpus.documents[d];
      for (std::size_t i = 0; i < doc.size(); ++i) {
        const int w = doc[i];
        int z = m.assignments[d][i];
        --m.topic_word[z][w];
        --m.topic_totals[z];
        --m.doc_topic[d][z];
        for (int k = 0; k < kt; ++k) {
          weights[k] = (m.doc_topic[d][k] + m.alpha) * (m.topic_word[k][w] + m.beta) /
                       (m.topic_totals[k] + vbeta);
        }
        z = sample_index(weights, rng);
        m.assignments[d][i] = z;
        ++m.topic_word[z][w];
        ++m.topic_totals[z];
        ++m.doc_topic[d][z];
      }
    }
  }
  return m;
}

bool counts_consistent(const TopicModel& model, const LdaCorpus& corpus) {
  const int kt = model.num_topics;
  std::vector<std::vector<long>> tw(kt, std::vector<long>(model.vocabulary.size(), 0));
  std::vector<long> totals(kt, 0);
  std::vector<std::vector<long>> dt(corpus.documents.size(), std::vector<long>(kt, 0));
  if (model.assignments.size() != corpus.documents.size()) return false;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    if (model.assignments[d].size() != corpus.documents[d].size()) return false;
    for (std::size_t i = 0; i < corpus.documents[d].size(); ++i) {
      const int z = model.assignments[d][i];
      ++tw[z][corpus.documents[d][i]];
      ++totals[z];
      ++dt[d][z];
    }
  }
  return tw == model.topic_word && totals == model.topic_totals && dt == model.doc_topic;
}

std::vector<WordProbability> top_words(const TopicModel& model, int topic, int k) {
  if (topic < 0 || topic >= model.num_topics) {
    throw IndexError("topic " + std::to_string(topic) + " outside [0, " +
                     std::to_string(model.num_topics) + ")");
  }
  const int v = static_cast<int>(model.vocabulary.size());
  std::vector<int> order(v);
  for (int i = 0; i < v; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return model.topic_word[topic][a] > model.topic_word[topic][b];
  });
  std::vector<WordProbability> out;
  for (int i = 0; i < std::min(k, v); ++i) {
    out.push_back({model.vocabulary.word(order[i]), model.word_probability(topic, order[i])});
  }
  return out;
}

TopicVector topic_vector(const TopicModel& model, const std::vector<int>& document,
                         const TopicInferenceConfig& config, std::uint64_t seed) {
  const int kt = model.num_topics;
  TopicVector out;
  out.bits.assign(kt, 0);
  out.fractions.assign(kt, 0.0);
  if (document.empty()) {
    out.empty_document = true;
    return out;
  }
  for (int w : document) {
    if (w < 0 || static_cast<std::size_t>(w) >= model.vocabulary.size()) {
      throw IndexError("token index " + std::to_string(w) + " outside vocabulary");
    }
  }
  const double tau = config.threshold < 0 ? 1.0 / (2.0 * kt) : config.threshold;
  const double vbeta = static_cast<double>(model.vocabulary.size()) * model.beta;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> initial(0, kt - 1);
  std::vector<int> z(document.size());
  std::vector<long> counts(kt, 0);
  for (auto& zi : z) {
    zi = initial(rng);
    ++counts[zi];
  }
  std::vector<double> weights(kt);
  std::vector<double> accum(kt, 0.0);
  const int total_sweeps = config.burn_in + std::max(config.samples, 1);
  for (int sweep = 0; sweep < total_sweeps; ++sweep) {
    for (std::size_t i = 0; i < document.size(); ++i) {
      const int w = document[i];
      --counts[z[i]];
      for (int k = 0; k < kt; ++k) {
        weights[k] = (counts[k] + model.alpha) * (model.topic_word[k][w] + model.beta) /
                     (model.topic_totals[k] + vbeta);
      }
      z[i] = sample_index(weights, rng);
      ++counts[z[i]];
    }
    if (sweep >= config.burn_in) {
      for (int k = 0; k < kt; ++k) accum[k] += static_cast<double>(counts[k]);
    }
  }
  const double norm = static_cast<double>(std::max(config.samples, 1)) * static_cast<double>(document.size());
  for (int k = 0; k < kt; ++k) {
    out.fractions[k] = accum[k] / norm;
    out.bits[k] = (out.fractions[k] > 0.0 && out.fractions[k] >= tau) ? 1 : 0;
  }
  return out;
}

std::vector<std::pair<std::string, TopicVector>> topic_vectors(const TopicModel& model,
                                                               const Dataset& dataset,
                                                               const TopicInferenceConfig& config,
                                                               std::uint64_t seed) {
  std::vector<std::pair<std::string, TopicVector>> out;
  for (const auto& video : dataset.videos) {
    const auto doc = document_tokens(video, model.vocabulary);
    out.emplace_back(video.id, topic_vector(model, doc, config, derive_seed(seed, fnv1a64(video.id))));
  }
  return out;
}

nlohmann::json to_json(const TopicModel& model) {
  return {
      {"schema_version", 1},
      {"num_topics", model.num_topics},
      {"alpha", model.alpha},
      {"beta", model.beta},
      {"seed", model.seed},
      {"vocabulary", model.vocabulary.words()},
      {"topic_word", model.topic_word},
  };
}

TopicModel topic_model_from_json(const nlohmann::json& j) {
  TopicModel m;
  m.num_topics = j.at("num_topics").get<int>();
  m.alpha = j.at("alpha").get<double>();
  m.beta = j.at("beta").get<double>();
  m.seed = j.value("seed", std::uint64_t{0});
  m.vocabulary = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
  j.at("topic_word").get_to(m.topic_word);
  if (static_cast<int>(m.topic_word.size()) != m.num_topics) {
    throw DataError("lda model: topic_word has " + std::to_string(m.topic_word.size()) + " rows, expected " +
                    std::to_string(m.num_topics));
  }
  m.topic_totals.assign(m.num_topics, 0);
  for (int k = 0; k < m.num_topics; ++k) {
    if (m.topic_word[k].size() != m.vocabulary.size()) throw DataError("lda model: topic_word row size mismatch");
    for (long c : m.topic_word[k]) m.topic_totals[k] += c;
  }
  return m;
}

nlohmann::json topic_vectors_to_json(const std::vector<std::pair<std::string, TopicVector>>& vectors) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, tv] : vectors) {
    arr.push_back({{"video", id}, {"bits", tv.bits}, {"fractions", tv.fractions}, {"empty", tv.empty_document}});
  }
  return {{"schema_version", 1}, {"vectors", arr}};
}

std::vector<std::pair<std::string, TopicVector>> topic_vectors_from_json(const nlohmann::json& j) {
  std::vector<std::pair<std::string, TopicVector>> out;
  for (const auto& e : j.at("vectors")) {
    TopicVector tv;
    e.at("bits").get_to(tv.bits);
    e.at("fractions").get_to(tv.fractions);
    tv.empty_document = e.at("empty").get<bool>();
    out.emplace_back(e.at("video").get<std::string>(), std::move(tv));
  }
  return out;
}

}  // namespace topicap
