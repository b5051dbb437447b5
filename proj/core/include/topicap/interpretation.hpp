#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicap/captioner.hpp"
#include "topicap/corpus.hpp"
#include "topicap/trainer.hpp"

namespace topicap {

// Maps a mean-pooled feature vector to per-topic scores.
using TopicPredictor = std::function<std::vector<double>(const std::vector<double>&)>;

struct NeuronAttribution {
  int topic = 0;
  int neuron = 0;
  double difference = 0.0;  // [f(v)]_i - [f(v with neuron zeroed)]_i
  friend bool operator==(const NeuronAttribution&, const NeuronAttribution&) = default;
};

// Prediction difference maximisation over an arbitrary predictor: for every
// topic i with s_i = 1, the neuron whose zeroing lowers [f(v)]_i the most.
// Exhaustive over all coordinates; ties go to the lowest neuron index.
std::vector<NeuronAttribution> pdm_scan(const TopicPredictor& f, const std::vector<double>& mean_pooled,
                                        const std::vector<int>& topics);

std::vector<NeuronAttribution> pdm_video(const CaptionModel& model, const Frames& frames,
                                         const std::vector<int>& topics);

struct NeuronTopicMap {
  int num_topics = 0;
  int num_neurons = 0;
  // topic -> neuron -> votes
  std::map<int, std::map<int, int>> topic_to_neurons;
  // neuron -> topic with most votes (lowest topic id on ties)
  std::map<int, int> neuron_to_topic;

  std::vector<int> neurons_for(int topic) const;
  friend bool operator==(const NeuronTopicMap&, const NeuronTopicMap&) = default;
};

// Each training video casts one vote per active topic for its winning neuron.
NeuronTopicMap build_map(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos,
                         const TopicVectorMap& topics);
NeuronTopicMap aggregate_votes(int num_topics, int num_neurons,
                               const std::vector<std::vector<NeuronAttribution>>& per_video);

nlohmann::json to_json(const NeuronTopicMap& map);
NeuronTopicMap neuron_map_from_json(const nlohmann::json& j);

struct Peakiness {
  std::vector<double> profile;  // mean of v over the subset
  double top1_mass = 0.0;       // max |profile_j| / sum |profile_j|
};

Peakiness peakiness_of_profile(std::vector<double> profile);
Peakiness peakiness(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos);

struct ActivationTrace {
  std::string video;
  int neuron = 0;
  std::vector<double> values;  // v_i[j], one per frame
};

ActivationTrace activation_trace(const CaptionModel& model, const SyntheticVideo& video, int neuron);

nlohmann::json to_json(const ActivationTrace& trace);
nlohmann::json to_json(const Peakiness& p);

}  // namespace topicap
