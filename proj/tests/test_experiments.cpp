#include <doctest.h>

#include <algorithm>
#include <iostream>

#include "pipeline_cache.hpp"
#include "topicap/evaluation.hpp"
#include "topicap/hitl.hpp"

using namespace topicap;

// Checks on the default synthetic LSTM-I run. Artifacts are cached under the
// build tree so reruns skip training.
namespace {

cache::PipelineCache& pipeline() {
  static cache::PipelineCache p(TOPICAP_EXPERIMENTS_WS);
  return p;
}

int top_neuron(const NeuronTopicMap& map, int topic) {
  const auto it = map.topic_to_neurons.find(topic);
  if (it == map.topic_to_neurons.end() || it->second.empty()) return -1;
  int best = -1, votes = -1;
  for (const auto& [j, n] : it->second) {
    if (n > votes) {
      best = j;
      votes = n;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("every common topic gets a neuron") {
  auto& p = pipeline();
  const auto& map = p.map(Variant::kInterpretive, 1);
  std::vector<int> counts(static_cast<std::size_t>(map.num_topics), 0);
  for (const auto* v : p.dataset().split(Split::kTrain)) {
    const auto& s = p.topics().at(v->id);
    for (std::size_t t = 0; t < s.size(); ++t) counts[t] += s[t];
  }
  for (int t = 0; t < map.num_topics; ++t) {
    if (counts[static_cast<std::size_t>(t)] < 10) continue;
    CAPTURE(t);
    CHECK_FALSE(map.neurons_for(t).empty());
  }
}

TEST_CASE("topic prediction on the test split") {
  auto& p = pipeline();
  const auto r = topic_f1(p.model(Variant::kInterpretive, 1), p.dataset().split(Split::kTest), p.topics());
  MESSAGE("micro-F1 " << r.micro.f1());
  CHECK(r.micro.f1() >= 0.8);
}

TEST_CASE("action neurons fire inside the action window") {
  auto& p = pipeline();
  const auto& model = p.model(Variant::kInterpretive, 1);
  const auto& map = p.map(Variant::kInterpretive, 1);
  int considered = 0, inside_higher = 0;
  for (const auto* v : p.dataset().split(Split::kTest)) {
    const int topic = topic_for_concept(p.lda(), p.dataset().concept_by_id(v->action_label));
    const int neuron = top_neuron(map, topic);
    if (neuron < 0) continue;
    const auto trace = activation_trace(model, *v, neuron);
    double in = 0.0, out = 0.0;
    int n_in = 0, n_out = 0;
    for (std::size_t i = 0; i < trace.values.size(); ++i) {
      const auto& present = v->frame_concepts[i];
      if (std::find(present.begin(), present.end(), v->action_label) != present.end()) {
        in += trace.values[i];
        ++n_in;
      } else {
        out += trace.values[i];
        ++n_out;
      }
    }
    if (n_in == 0 || n_out == 0) continue;
    ++considered;
    if (in / n_in > out / n_out) ++inside_higher;
  }
  MESSAGE(inside_higher << "/" << considered << " videos");
  REQUIRE(considered > 0);
  CHECK(inside_higher * 10 >= considered * 7);
}

TEST_CASE("enhancement raises the requested topic score") {
  auto& p = pipeline();
  const auto& model = p.model(Variant::kInterpretive, 1);
  const auto& map = p.map(Variant::kInterpretive, 1);
  const auto profile = build_profile(model, p.dataset().split(Split::kTrain), p.topics(), map);
  FailureCaseOptions options;
  options.count = 50;
  const auto cases = plant_failure_cases(p.dataset(), model, p.lda(), map, options);
  REQUIRE(cases.size() == 50);
  int raised = 0;
  for (const auto& c : cases) {
    const auto v = video_features(model, c.video.frames).mean_pooled;
    const auto target = enhance(v, {c.topic}, map, profile);
    const auto t = static_cast<std::size_t>(c.topic);
    if (predict_topics(model, target)[t] > predict_topics(model, v)[t]) ++raised;
  }
  MESSAGE(raised << "/50 raised");
  CHECK(raised * 10 >= 50 * 9);
}
