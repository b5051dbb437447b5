#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "topicap/errors.hpp"
#include "topicap/hitl.hpp"

using namespace topicap;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.input_dim = 4;
  c.encoder_hidden = 3;
  c.decoder_hidden = 4;
  c.embedding_dim = 2;
  c.attention_dim = 2;
  c.head_hidden = 5;
  c.num_topics = 3;
  return c;
}

Frames random_frames(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Frames f(static_cast<std::size_t>(n), std::vector<double>(4));
  for (auto& row : f) {
    for (auto& x : row) x = u(rng);
  }
  return f;
}

NeuronTopicMap one_neuron_map(int topic, int neuron) {
  return aggregate_votes(3, 6, {{{topic, neuron, 1.0}}});
}

bool non_encoder_equal(const CaptionModel& a, const CaptionModel& b) {
  for (const auto* p : a.params().all()) {
    if (CaptionModel::is_encoder_parameter(p->name)) continue;
    if (!(p->value == b.params().get(p->name).value)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("enhance: zero profile is the identity") {
  const std::vector<double> v = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const auto map = one_neuron_map(1, 3);
  EnhancementProfile zero;
  zero.mean_activation[{1, 3}] = 0.0;
  CHECK(enhance(v, {1}, map, zero) == v);
}

TEST_CASE("enhance: single neuron and summed topics") {
  const std::vector<double> v = {0.0, 0.0, 0.1, 0.0, 0.0, 0.0};
  const auto map = aggregate_votes(3, 6, {{{0, 2, 1.0}, {1, 2, 1.0}, {1, 5, 1.0}}});
  EnhancementProfile profile;
  profile.mean_activation[{0, 2}] = 0.7;
  profile.mean_activation[{1, 2}] = 0.2;
  profile.mean_activation[{1, 5}] = -0.3;
  const auto one = enhance(v, {0}, map, profile);
  CHECK(one[2] == doctest::Approx(0.8));
  for (std::size_t j : {0u, 1u, 3u, 4u, 5u}) CHECK(one[j] == v[j]);
  const auto both = enhance(v, {0, 1}, map, profile);
  CHECK(both[2] == doctest::Approx(1.0));
  CHECK(both[5] == doctest::Approx(-0.3));
}

TEST_CASE("enhance: topics without neurons are unrefinable") {
  const auto map = one_neuron_map(1, 3);
  try {
    enhance(std::vector<double>(6, 0.0), {2}, map, {});
    FAIL("expected UnrefinableTopicError");
  } catch (const UnrefinableTopicError& e) {
    CHECK(e.topic() == 2);
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
  CHECK_THROWS_AS(enhance(std::vector<double>(6, 0.0), {7}, map, {}), IndexError);
}

TEST_CASE("correction propagation at its minimum changes nothing") {
  const CaptionModel m(small_config(), {"a"}, 3);
  const auto clip = random_frames(4, 1);
  const auto target = video_features(m, clip).mean_pooled;
  const auto r = correction_propagation(m, clip, target);
  CHECK(r.result.initial_loss == 0.0);
  CHECK(r.result.final_loss == 0.0);
  CHECK(r.model == m);
}

TEST_CASE("correction propagation: encoder only, monotone, original untouched") {
  const CaptionModel m(small_config(), {"a"}, 4);
  const auto snapshot = m;
  const auto clip = random_frames(4, 2);
  auto target = video_features(m, clip).mean_pooled;
  target[1] += 0.5;
  target[4] -= 0.3;
  const auto r = correction_propagation(m, clip, target);
  CHECK(m == snapshot);
  CHECK_FALSE(r.result.failed);
  CHECK(r.result.final_loss <= r.result.initial_loss);
  CHECK(r.result.final_loss < r.result.initial_loss);
  CHECK(non_encoder_equal(r.model, m));
  CHECK_FALSE(r.model == m);
  CHECK(r.result.feature_distance >= 0.0);
  CHECK(r.result.parameter_distance > 0.0);
  CHECK(r.result.steps == 50);
}

TEST_CASE("large mu shrinks the parameter change") {
  const CaptionModel m(small_config(), {"a"}, 5);
  const auto clip = random_frames(4, 3);
  auto target = video_features(m, clip).mean_pooled;
  for (auto& x : target) x += 0.2;
  RefinementOptions loose, tight;
  tight.mu = 1e6;
  const auto a = correction_propagation(m, clip, target, loose);
  const auto b = correction_propagation(m, clip, target, tight);
  CHECK(b.result.parameter_distance < a.result.parameter_distance);
}

TEST_CASE("correction propagation failure and argument errors") {
  const CaptionModel m(small_config(), {"a"}, 6);
  const auto clip = random_frames(4, 4);
  auto target = video_features(m, clip).mean_pooled;
  target[0] = std::numeric_limits<double>::infinity();
  const auto r = correction_propagation(m, clip, target);
  CHECK(r.result.failed);
  CHECK_FALSE(r.result.diagnostic.empty());
  CHECK(r.model == m);

  RefinementOptions bad;
  bad.steps = 0;
  CHECK_THROWS_AS(correction_propagation(m, clip, video_features(m, clip).mean_pooled, bad), ConfigError);
  bad.steps = 5;
  bad.mu = -1.0;
  CHECK_THROWS_AS(correction_propagation(m, clip, video_features(m, clip).mean_pooled, bad), ConfigError);
  CHECK_THROWS_AS(correction_propagation(m, clip, {1.0, 2.0}), DimensionError);
}

TEST_CASE("split_halves") {
  const auto f = random_frames(8, 5);
  const auto [a, b] = split_halves(f);
  CHECK(a.size() == 4);
  CHECK(b.size() == 4);
  CHECK(a.front() == f.front());
  CHECK(b.back() == f.back());
  CHECK(split_halves(random_frames(5, 1)).first.size() == 2);
  CHECK_THROWS_AS(split_halves(random_frames(1, 1)), ContractError);
}

TEST_CASE("enhancement profile averages over videos carrying the topic") {
  const CaptionModel m(small_config(), {"a"}, 7);
  SyntheticVideo a, b, c;
  a.id = "a";
  a.frames = random_frames(4, 10);
  b.id = "b";
  b.frames = random_frames(4, 11);
  c.id = "c";
  c.frames = random_frames(4, 12);
  const TopicVectorMap topics = {{"a", {0, 1, 0}}, {"b", {0, 1, 1}}, {"c", {1, 0, 0}}};
  const auto map = aggregate_votes(3, 6, {{{1, 4, 1.0}}, {{2, 0, 1.0}}});
  const auto profile = build_profile(m, {&a, &b, &c}, topics, map);
  const auto fa = video_features(m, a.frames).mean_pooled, fb = video_features(m, b.frames).mean_pooled;
  CHECK(profile.at(1, 4) == doctest::Approx((fa[4] + fb[4]) / 2).epsilon(1e-14));
  CHECK(profile.at(2, 0) == doctest::Approx(fb[0]).epsilon(1e-14));
  CHECK(profile.mean_activation.size() == 2);
  CHECK(enhancement_profile_from_json(to_json(profile)) == profile);
}

TEST_CASE("refine_video requires topics and reports both captions") {
  CaptionModel m(small_config(), {"a", "b"}, 8);
  SyntheticVideo v;
  v.id = "v";
  v.frames = random_frames(6, 13);
  const auto map = one_neuron_map(0, 1);
  EnhancementProfile profile;
  profile.mean_activation[{0, 1}] = 0.4;
  CHECK_THROWS_AS(refine_video(m, v, {}, map, profile), ConfigError);
  RefinementOptions o;
  o.steps = 5;
  const auto r = refine_video(m, v, {0}, map, profile, o, 5);
  CHECK(r.result.video == "v");
  CHECK(r.result.topics == std::vector<int>{0});
  CHECK(r.result.caption_before.size() <= 5);
  CHECK(r.result.caption_after.size() <= 5);
  CHECK(r.result.final_loss <= r.result.initial_loss);
}

TEST_CASE("topic lookup for a concept and caption mentions") {
  TopicModel lda;
  lda.num_topics = 2;
  lda.alpha = 1.0;
  lda.beta = 0.01;
  lda.vocabulary = Vocabulary({"dog", "puppy", "cat", "kitten"});
  lda.topic_word = {{0, 1, 40, 30}, {50, 20, 0, 2}};
  lda.topic_totals = {71, 72};
  Concept dog{0, ConceptKind::kObject, "dog", {"dog", "puppy", "hound"}};
  Concept cat{1, ConceptKind::kObject, "cat", {"cat", "kitten", "tabby"}};
  CHECK(topic_for_concept(lda, dog) == 1);
  CHECK(topic_for_concept(lda, cat) == 0);
  CHECK(caption_mentions({"a", "puppy", "is", "running"}, dog));
  CHECK_FALSE(caption_mentions({"a", "kitten"}, dog));
}
