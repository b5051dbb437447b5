#include "topicap/interpretation.hpp"

#include <cmath>

#include "topicap/errors.hpp"

namespace topicap {

std::vector<NeuronAttribution> pdm_scan(const TopicPredictor& f, const std::vector<double>& mean_pooled,
                                        const std::vector<int>& topics) {
  const auto base = f(mean_pooled);
  if (base.size() != topics.size()) {
    throw DimensionError("pdm: predictor returns " + std::to_string(base.size()) + " scores for " +
                         std::to_string(topics.size()) + " topics");
  }
  bool any = false;
  for (int t : topics) any = any || t != 0;
  if (!any) return {};

  // ablated[j] = f(v with coordinate j zeroed)
  std::vector<std::vector<double>> ablated;
  ablated.reserve(mean_pooled.size());
  auto v = mean_pooled;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double saved = v[j];
    v[j] = 0.0;
    ablated.push_back(f(v));
    v[j] = saved;
  }

  std::vector<NeuronAttribution> out;
  for (std::size_t i = 0; i < topics.size(); ++i) {
    if (topics[i] == 0) continue;
    NeuronAttribution best{static_cast<int>(i), 0, base[i] - ablated[0][i]};
    for (std::size_t j = 1; j < ablated.size(); ++j) {
      const double diff = base[i] - ablated[j][i];
      if (diff > best.difference) {
        best.neuron = static_cast<int>(j);
        best.difference = diff;
      }
    }
    out.push_back(best);
  }
  return out;
}

std::vector<NeuronAttribution> pdm_video(const CaptionModel& model, const Frames& frames,
                                         const std::vector<int>& topics) {
  if (static_cast<int>(topics.size()) != model.config().num_topics) {
    throw DimensionError("pdm: topic vector length " + std::to_string(topics.size()) + " does not match N_t " +
                         std::to_string(model.config().num_topics));
  }
  const auto features = video_features(model, frames);
  return pdm_scan([&](const std::vector<double>& v) { return predict_topics(model, v); }, features.mean_pooled,
                  topics);
}

std::vector<int> NeuronTopicMap::neurons_for(int topic) const {
  std::vector<int> out;
  auto it = topic_to_neurons.find(topic);
  if (it == topic_to_neurons.end()) return out;
  for (const auto& [neuron, votes] : it->second) {
    if (votes > 0) out.push_back(neuron);
  }
  return out;
}

NeuronTopicMap aggregate_votes(int num_topics, int num_neurons,
                               const std::vector<std::vector<NeuronAttribution>>& per_video) {
  NeuronTopicMap map;
  map.num_topics = num_topics;
  map.num_neurons = num_neurons;
  for (const auto& video : per_video) {
    for (const auto& a : video) {
      if (a.neuron < 0 || a.neuron >= num_neurons) {
        throw IndexError("neuron " + std::to_string(a.neuron) + " outside [0, " + std::to_string(num_neurons) + ")");
      }
      ++map.topic_to_neurons[a.topic][a.neuron];
    }
  }
  std::map<int, std::pair<int, int>> best;  // neuron -> (votes, topic)
  for (const auto& [topic, neurons] : map.topic_to_neurons) {
    for (const auto& [neuron, votes] : neurons) {
      auto it = best.find(neuron);
      // topics iterate in ascending order, so strict > keeps the lowest id on ties
      if (it == best.end() || votes > it->second.first) best[neuron] = {votes, topic};
    }
  }
  for (const auto& [neuron, vt] : best) map.neuron_to_topic[neuron] = vt.second;
  return map;
}

NeuronTopicMap build_map(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos,
                         const TopicVectorMap& topics) {
  std::vector<std::vector<NeuronAttribution>> per_video;
  per_video.reserve(videos.size());
  for (const auto* v : videos) {
    auto it = topics.find(v->id);
    if (it == topics.end()) throw DataError("no topic vector for video '" + v->id + "'");
    per_video.push_back(pdm_video(model, v->frames, it->second));
  }
  return aggregate_votes(model.config().num_topics, model.config().feature_dim(), per_video);
}

nlohmann::json to_json(const NeuronTopicMap& map) {
  nlohmann::json topics = nlohmann::json::array();
  for (const auto& [topic, neurons] : map.topic_to_neurons) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [neuron, votes] : neurons) list.push_back({{"neuron", neuron}, {"votes", votes}});
    topics.push_back({{"topic", topic}, {"neurons", list}});
  }
  nlohmann::json neurons = nlohmann::json::array();
  for (const auto& [neuron, topic] : map.neuron_to_topic) neurons.push_back({{"neuron", neuron}, {"topic", topic}});
  return {{"schema_version", 1},
          {"num_topics", map.num_topics},
          {"num_neurons", map.num_neurons},
          {"topic_to_neurons", topics},
          {"neuron_to_topic", neurons}};
}

NeuronTopicMap neuron_map_from_json(const nlohmann::json& j) {
  NeuronTopicMap map;
  map.num_topics = j.at("num_topics").get<int>();
  map.num_neurons = j.at("num_neurons").get<int>();
  for (const auto& t : j.at("topic_to_neurons")) {
    auto& slot = map.topic_to_neurons[t.at("topic").get<int>()];
    for (const auto& n : t.at("neurons")) slot[n.at("neuron").get<int>()] = n.at("votes").get<int>();
  }
  for (const auto& n : j.at("neuron_to_topic")) {
    const int neuron = n.at("neuron").get<int>();
    if (neuron < 0 || neuron >= map.num_neurons) throw DataError("map neuron index out of range");
    map.neuron_to_topic[neuron] = n.at("topic").get<int>();
  }
  return map;
}

Peakiness peakiness_of_profile(std::vector<double> profile) {
  if (profile.empty()) throw ContractError("peakiness: empty profile");
  double total = 0.0, top = 0.0;
  for (double x : profile) {
    total += std::abs(x);
    top = std::max(top, std::abs(x));
  }
  Peakiness p;
  p.profile = std::move(profile);
  p.top1_mass = total > 0.0 ? top / total : 0.0;
  return p;
}

Peakiness peakiness(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos) {
  if (videos.empty()) throw ContractError("peakiness: no videos share the topic");
  std::vector<double> profile(static_cast<std::size_t>(model.config().feature_dim()), 0.0);
  for (const auto* v : videos) {
    const auto f = video_features(model, v->frames);
    for (std::size_t j = 0; j < profile.size(); ++j) profile[j] += f.mean_pooled[j];
  }
  for (auto& x : profile) x /= static_cast<double>(videos.size());
  return peakiness_of_profile(std::move(profile));
}

ActivationTrace activation_trace(const CaptionModel& model, const SyntheticVideo& video, int neuron) {
  if (neuron < 0 || neuron >= model.config().feature_dim()) {
    throw IndexError("neuron " + std::to_string(neuron) + " outside [0, " +
                     std::to_string(model.config().feature_dim()) + ")");
  }
  const auto f = video_features(model, video.frames);
  ActivationTrace trace{video.id, neuron, {}};
  for (const auto& v : f.frames) trace.values.push_back(v[static_cast<std::size_t>(neuron)]);
  return trace;
}

nlohmann::json to_json(const ActivationTrace& trace) {
  return {{"video", trace.video}, {"neuron", trace.neuron}, {"values", trace.values}};
}

nlohmann::json to_json(const Peakiness& p) { return {{"profile", p.profile}, {"top1_mass", p.top1_mass}}; }

}  // namespace topicap
