#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicap/adadelta.hpp"
#include "topicap/captioner.hpp"
#include "topicap/corpus.hpp"
#include "topicap/interpretation.hpp"
#include "topicap/lda.hpp"
#include "topicap/trainer.hpp"

namespace topicap {

// Mean activation of neuron j over the training videos whose topic vector has
// topic t set, for every (t, j) pair of the neuron-topic map.
struct EnhancementProfile {
  std::map<std::pair<int, int>, double> mean_activation;

  double at(int topic, int neuron) const;
  friend bool operator==(const EnhancementProfile&, const EnhancementProfile&) = default;
};

EnhancementProfile build_profile(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos,
                                 const TopicVectorMap& topics, const NeuronTopicMap& map);

nlohmann::json to_json(const EnhancementProfile& profile);
EnhancementProfile enhancement_profile_from_json(const nlohmann::json& j);

// v*_j = v_j + sum over requested topics t associated with j of a_j(t).
// Throws UnrefinableTopicError when a topic has no associated neuron.
std::vector<double> enhance(const std::vector<double>& mean_pooled, const std::vector<int>& topics,
                            const NeuronTopicMap& map, const EnhancementProfile& profile);

struct RefinementOptions {
  double mu = 1.0;
  int steps = 50;
  AdadeltaOptions adadelta;
};

struct RefinementResult {
  std::string video;
  std::vector<int> topics;
  double mu = 0.0;
  int steps = 0;           // optimizer steps taken
  int rejected_steps = 0;  // steps undone because the objective rose
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double feature_distance = 0.0;    // ||v' - v*||
  double parameter_distance = 0.0;  // ||theta' - theta||
  bool failed = false;
  std::string diagnostic;
  std::vector<std::string> caption_before;  // on the held-out second half
  std::vector<std::string> caption_after;
  std::optional<double> test_bleu_before;
  std::optional<double> test_bleu_after;
};

nlohmann::json to_json(const RefinementResult& r);

struct Refinement {
  CaptionModel model;
  RefinementResult result;
};

// Fine-tunes encoder parameters only so the mean-pooled features of `clip`
// approach `target`, with a penalty mu ||theta' - theta||^2 on drift. Steps that
// raise the objective are undone. `model` is never modified.
Refinement correction_propagation(const CaptionModel& model, const Frames& clip, const std::vector<double>& target,
                                  const RefinementOptions& options = {});

// First and second half of a video's frames (the first half is the refinement
// clip, the second is held out).
std::pair<Frames, Frames> split_halves(const Frames& frames);

// Full workflow for one video: enhance the first half's features for the
// requested topics, refine, and caption the second half before and after.
Refinement refine_video(const CaptionModel& model, const SyntheticVideo& video, const std::vector<int>& topics,
                        const NeuronTopicMap& map, const EnhancementProfile& profile,
                        const RefinementOptions& options = {}, int max_caption_length = 20);

// LDA topic whose counts concentrate most on a concept's surface words.
int topic_for_concept(const TopicModel& lda, const Concept& object);

struct FailureCase {
  SyntheticVideo video;
  int concept_id = 0;  // attenuated object concept
  int topic = 0;    // LDA topic to request
};

struct FailureCaseOptions {
  int count = 10;
  double attenuation = 0.25;  // gain on the chosen object's embedding
  int max_attempts = 2000;
  std::uint64_t seed = 1;
  int max_caption_length = 20;
};

// Renders single-object videos whose object is attenuated and keeps those whose
// second-half caption lacks every surface word of the object. Only objects that
// are the sole concept of their topic, and whose topic has an associated neuron,
// are used.
std::vector<FailureCase> plant_failure_cases(const Dataset& dataset, const CaptionModel& model,
                                             const TopicModel& lda, const NeuronTopicMap& map,
                                             const FailureCaseOptions& options = {});

bool caption_mentions(const std::vector<std::string>& caption, const Concept& object);

}  // namespace topicap
