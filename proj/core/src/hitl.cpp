#include "topicap/hitl.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "topicap/errors.hpp"

namespace topicap {

double EnhancementProfile::at(int topic, int neuron) const {
  auto it = mean_activation.find({topic, neuron});
  return it == mean_activation.end() ? 0.0 : it->second;
}

EnhancementProfile build_profile(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos,
                                 const TopicVectorMap& topics, const NeuronTopicMap& map) {
  std::vector<std::vector<double>> means;
  std::vector<const std::vector<int>*> bits;
  for (const auto* v : videos) {
    auto it = topics.find(v->id);
    if (it == topics.end()) throw DataError("no topic vector for video '" + v->id + "'");
    means.push_back(video_features(model, v->frames).mean_pooled);
    bits.push_back(&it->second);
  }
  EnhancementProfile profile;
  for (const auto& [topic, neurons] : map.topic_to_neurons) {
    for (const auto& [neuron, votes] : neurons) {
      if (votes <= 0) continue;
      double total = 0.0;
      int count = 0;
      for (std::size_t k = 0; k < means.size(); ++k) {
        if (topic < static_cast<int>(bits[k]->size()) && (*bits[k])[static_cast<std::size_t>(topic)]) {
          total += means[k][static_cast<std::size_t>(neuron)];
          ++count;
        }
      }
      profile.mean_activation[{topic, neuron}] = count ? total / count : 0.0;
    }
  }
  return profile;
}

nlohmann::json to_json(const EnhancementProfile& profile) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, value] : profile.mean_activation) {
    entries.push_back({{"topic", key.first}, {"neuron", key.second}, {"mean_activation", value}});
  }
  return {{"schema_version", 1}, {"entries", entries}};
}

EnhancementProfile enhancement_profile_from_json(const nlohmann::json& j) {
  EnhancementProfile profile;
  for (const auto& e : j.at("entries")) {
    profile.mean_activation[{e.at("topic").get<int>(), e.at("neuron").get<int>()}] =
        e.at("mean_activation").get<double>();
  }
  return profile;
}

std::vector<double> enhance(const std::vector<double>& mean_pooled, const std::vector<int>& topics,
                            const NeuronTopicMap& map, const EnhancementProfile& profile) {
  auto target = mean_pooled;
  for (int t : topics) {
    if (t < 0 || t >= map.num_topics) {
      throw IndexError("topic " + std::to_string(t) + " outside [0, " + std::to_string(map.num_topics) + ")");
    }
    const auto neurons = map.neurons_for(t);
    if (neurons.empty()) {
      throw UnrefinableTopicError(t, "topic " + std::to_string(t) + " has no associated neuron");
    }
    for (int j : neurons) {
      if (j < 0 || j >= static_cast<int>(target.size())) {
        throw IndexError("neuron " + std::to_string(j) + " outside the feature vector");
      }
      target[static_cast<std::size_t>(j)] += profile.at(t, j);
    }
  }
  return target;
}

nlohmann::json to_json(const RefinementResult& r) {
  const auto opt = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
  return {{"video", r.video},
          {"topics", r.topics},
          {"mu", r.mu},
          {"steps", r.steps},
          {"rejected_steps", r.rejected_steps},
          {"initial_loss", r.initial_loss},
          {"final_loss", r.final_loss},
          {"feature_distance", r.feature_distance},
          {"parameter_distance", r.parameter_distance},
          {"failed", r.failed},
          {"diagnostic", r.diagnostic},
          {"caption_before", r.caption_before},
          {"caption_after", r.caption_after},
          {"test_bleu_before", opt(r.test_bleu_before)},
          {"test_bleu_after", opt(r.test_bleu_after)}};
}

namespace {

struct Objective {
  double loss = 0.0;
  double feature_sq = 0.0;
};

// Evaluates ||v' - v*||^2 + mu ||theta' - theta||^2 and leaves its gradient in
// the encoder parameters.
Objective evaluate(CaptionModel& model, const Frames& clip, const Tensor& target,
                   const std::map<std::string, Tensor>& anchor, double mu) {
  model.params().zero_grad();
  Tape tape;
  const auto encoded = encode(tape, model, clip);
  Var feature = squared_distance(encoded.mean_pooled, tape.constant(target));
  std::vector<Var> terms{feature};
  if (mu > 0) {
    for (const auto& [name, theta] : anchor) {
      terms.push_back(scale(squared_distance(tape.param(model.params().get(name)), tape.constant(theta)), mu));
    }
  }
  Var loss = add_n(terms);
  Objective out{loss.value().item(), feature.value().item()};
  if (std::isfinite(out.loss)) tape.backward(loss);
  return out;
}

}  // namespace

Refinement correction_propagation(const CaptionModel& model, const Frames& clip, const std::vector<double>& target,
                                  const RefinementOptions& options) {
  if (options.steps < 1) throw ConfigError("refinement needs at least one step");
  if (options.mu < 0) throw ConfigError("mu must be >= 0");
  if (static_cast<int>(target.size()) != model.config().feature_dim()) {
    throw DimensionError("target has " + std::to_string(target.size()) + " entries, features have " +
                         std::to_string(model.config().feature_dim()));
  }

  Refinement out{model, {}};
  out.result.mu = options.mu;
  CaptionModel& refined = out.model;

  std::map<std::string, Tensor> anchor;
  std::vector<Parameter*> encoder;
  for (auto& [name, p] : refined.params()) {
    if (CaptionModel::is_encoder_parameter(name)) {
      anchor.emplace(name, p.value);
      encoder.push_back(&p);
    }
  }
  const Tensor goal = Tensor::vector(target);

  auto current = evaluate(refined, clip, goal, anchor, options.mu);
  out.result.initial_loss = current.loss;
  const auto fail = [&](const std::string& why) {
    Refinement original{model, out.result};
    original.result.failed = true;
    original.result.diagnostic = why;
    original.result.final_loss = out.result.initial_loss;
    original.result.parameter_distance = 0.0;
    return original;
  };
  if (!std::isfinite(current.loss)) return fail("non-finite objective before refinement");

  AdadeltaState state;
  for (int step = 0; step < options.steps; ++step) {
    std::vector<Tensor> saved;
    saved.reserve(encoder.size());
    for (auto* p : encoder) saved.push_back(p->value);
    adadelta_step(encoder, state, options.adadelta);
    ++out.result.steps;
    auto next = evaluate(refined, clip, goal, anchor, options.mu);
    if (!std::isfinite(next.loss)) return fail("non-finite objective at step " + std::to_string(step + 1));
    if (next.loss > current.loss) {
      for (std::size_t k = 0; k < encoder.size(); ++k) encoder[k]->value = saved[k];
      ++out.result.rejected_steps;
      current = evaluate(refined, clip, goal, anchor, options.mu);
    } else {
      current = next;
    }
  }
  refined.params().zero_grad();

  out.result.final_loss = current.loss;
  out.result.feature_distance = std::sqrt(current.feature_sq);
  double drift = 0.0;
  for (const auto& [name, theta] : anchor) {
    const auto& now = refined.params().get(name).value.data();
    for (std::size_t k = 0; k < now.size(); ++k) drift += (now[k] - theta.data()[k]) * (now[k] - theta.data()[k]);
  }
  out.result.parameter_distance = std::sqrt(drift);
  return out;
}

std::pair<Frames, Frames> split_halves(const Frames& frames) {
  if (frames.size() < 2) throw ContractError("refinement needs a video with at least two frames");
  const auto mid = frames.begin() + static_cast<std::ptrdiff_t>(frames.size() / 2);
  return {Frames(frames.begin(), mid), Frames(mid, frames.end())};
}

Refinement refine_video(const CaptionModel& model, const SyntheticVideo& video, const std::vector<int>& topics,
                        const NeuronTopicMap& map, const EnhancementProfile& profile,
                        const RefinementOptions& options, int max_caption_length) {
  if (topics.empty()) throw ConfigError("refinement needs at least one missing topic");
  const auto [clip, held_out] = split_halves(video.frames);
  const auto target = enhance(video_features(model, clip).mean_pooled, topics, map, profile);
  auto out = correction_propagation(model, clip, target, options);
  out.result.video = video.id;
  out.result.topics = topics;
  out.result.caption_before = generate(model, held_out, max_caption_length, 1).words(model);
  out.result.caption_after = generate(out.model, held_out, max_caption_length, 1).words(out.model);
  return out;
}

int topic_for_concept(const TopicModel& lda, const Concept& object) {
  int best = 0;
  double best_mass = -1.0;
  for (int t = 0; t < lda.num_topics; ++t) {
    double mass = 0.0;
    for (const auto& w : object.words) {
      if (auto id = lda.vocabulary.find(w)) mass += lda.word_probability(t, *id);
    }
    if (mass > best_mass) {
      best_mass = mass;
      best = t;
    }
  }
  return best;
}

bool caption_mentions(const std::vector<std::string>& caption, const Concept& object) {
  for (const auto& w : caption) {
    for (const auto& s : object.words) {
      if (w == s) return true;
    }
  }
  return false;
}

std::vector<FailureCase> plant_failure_cases(const Dataset& dataset, const CaptionModel& model,
                                             const TopicModel& lda, const NeuronTopicMap& map,
                                             const FailureCaseOptions& options) {
  const auto& config = dataset.manifest.config;
  std::map<int, int> topic_of;
  std::map<int, int> concepts_per_topic;
  for (const auto& c : config.concepts) {
    topic_of[c.id] = topic_for_concept(lda, c);
    ++concepts_per_topic[topic_of[c.id]];
  }
  // a topic shared by several concepts does not say which word is missing
  std::vector<int> objects;
  for (const auto& c : config.concepts) {
    const int t = topic_of[c.id];
    if (c.kind == ConceptKind::kObject && concepts_per_topic[t] == 1 && !map.neurons_for(t).empty()) {
      objects.push_back(c.id);
    }
  }
  if (objects.empty()) throw DataError("no object concept owns a topic with an associated neuron");

  const auto embeddings = concept_embeddings(dataset.manifest);
  std::vector<FailureCase> cases;
  std::mt19937_64 rng(derive_seed(options.seed, 0xFA11ULL));
  for (int attempt = 0; attempt < options.max_attempts && static_cast<int>(cases.size()) < options.count;
       ++attempt) {
    VideoPlan plan = sample_plan(config, rng);
    // cycle through objects so the cases cover them evenly
    const int object = objects[cases.size() % objects.size()];
    plan.objects = {object};
    plan.attenuation = {{object, options.attenuation}};
    char id[24];
    std::snprintf(id, sizeof id, "fail%04d", attempt);
    auto video = render_video(dataset.manifest, embeddings, plan, id, Split::kTest,
                              derive_seed(options.seed, 0xFA110000ULL + static_cast<std::uint64_t>(attempt)));
    const auto held_out = split_halves(video.frames).second;
    const auto caption = generate(model, held_out, options.max_caption_length, 1).words(model);
    if (caption_mentions(caption, dataset.concept_by_id(object))) continue;
    cases.push_back({std::move(video), object, topic_of[object]});
  }
  return cases;
}

}  // namespace topicap
