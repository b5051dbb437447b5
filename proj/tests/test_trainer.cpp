#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "topicap/adadelta.hpp"
#include "topicap/errors.hpp"
#include "topicap/trainer.hpp"
#include "topicap/workspace.hpp"

using namespace topicap;

namespace {

Dataset small_dataset(int train, int descriptions = 5, std::uint64_t seed = 2) {
  DatasetConfig c;
  c.train_videos = train;
  c.val_videos = 2;
  c.test_videos = 2;
  c.descriptions_per_video = descriptions;
  return generate_dataset(c, seed);
}

TopicVectorMap fake_topics(const Dataset& ds, int nt) {
  TopicVectorMap m;
  for (const auto& v : ds.videos) {
    std::vector<int> s(static_cast<std::size_t>(nt), 0);
    for (int c : v.active_concepts) s[static_cast<std::size_t>(c % nt)] = 1;
    m[v.id] = s;
  }
  return m;
}

TrainConfig quick(Variant variant, int epochs) {
  TrainConfig c;
  c.variant = variant;
  c.epochs = epochs;
  c.validate = false;
  return c;
}

}  // namespace

TEST_CASE("adadelta: zero gradient leaves parameters and decays state") {
  Parameter p("p", Tensor::vector({1.0, -2.0}));
  AdadeltaState state;
  p.grad = Tensor::vector({0.5, 0.25});
  adadelta_step({&p}, state);
  const auto after_one = p.value;
  const auto g2 = state.slots["p"].mean_sq_grad;
  const auto dx2 = state.slots["p"].mean_sq_update;
  p.grad.fill(0.0);
  adadelta_step({&p}, state);
  CHECK(p.value == after_one);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(state.slots["p"].mean_sq_grad[i] == doctest::Approx(0.95 * g2[i]).epsilon(1e-15));
    CHECK(state.slots["p"].mean_sq_update[i] == doctest::Approx(0.95 * dx2[i]).epsilon(1e-15));
  }
}

TEST_CASE("adadelta: first step matches the hand-evaluated rule") {
  const std::vector<double> g = {3.0, -0.01, 1e-4, 0.0};
  Parameter p("p", Tensor::vector({0, 0, 0, 0}));
  p.grad = Tensor::vector(g);
  AdadeltaState state;
  adadelta_step({&p}, state);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(p.value[i] == doctest::Approx(oracle::adadelta_first_update(g[i], 0.95, 1e-6)).epsilon(1e-12));
  }
}

TEST_CASE("adadelta: monotone decrease on a convex quadratic") {
  Parameter p("p", Tensor::vector({2.0, -1.5, 0.7}));
  AdadeltaState state;
  double prev = 1e300;
  for (int step = 0; step < 20; ++step) {
    p.zero_grad();
    Tape t;
    auto loss = squared_norm(t.param(p));
    const double value = loss.value().item();
    CHECK(value < prev);
    prev = value;
    t.backward(loss);
    adadelta_step({&p}, state);
  }
}

TEST_CASE("sentence loss falls over 50 steps on one memorizable pair") {
  const auto ds = small_dataset(1, 1);
  const auto words = build_caption_vocabulary(ds);
  CaptionModel m(ModelConfig{}, words, 3);
  const auto& v = ds.videos.front();
  const auto tokens = m.token_ids(tokenize(v.descriptions[0]));
  AdadeltaState state;
  std::vector<double> losses;
  for (int step = 0; step <= 50; ++step) {
    m.params().zero_grad();
    Tape t;
    auto loss = sentence_nll(t, m, encode(t, m, v.frames), tokens);
    losses.push_back(loss.value().item());
    t.backward(loss);
    adadelta_step(m.params().all(), state);
  }
  // Adadelta is not a descent method step by step; the run as a whole must fall.
  CHECK(losses.back() < losses.front());
  CHECK(losses.back() < 0.5 * losses.front());
}

TEST_CASE("memorizing one pair") {
  auto ds = small_dataset(1, 1);
  auto c = quick(Variant::kBaseline, 200);
  c.batch_size = 1;
  const auto result = train(ds, nullptr, c);
  CHECK(result.report.epochs.size() == 200);
  CHECK(result.report.epochs.back().task_loss_per_word < 0.1);
  const auto& v = *ds.split(Split::kTrain).front();
  const auto caption = generate(result.model, v.frames, 20);
  CHECK(caption.text(result.model) == [&] {
    std::string s;
    for (const auto& w : tokenize(v.descriptions[0], false)) s += (s.empty() ? "" : " ") + w;
    return s;
  }());
}

TEST_CASE("identical config and seed give identical checkpoints") {
  const auto ds = small_dataset(6);
  const auto topics = fake_topics(ds, 10);
  const auto c = quick(Variant::kInterpretive, 2);
  const auto a = train(ds, &topics, c), b = train(ds, &topics, c);
  CHECK(serialize(to_json(a.model)) == serialize(to_json(b.model)));
}

TEST_CASE("LSTM-B ignores topic vectors but still reports the interpretive term") {
  const auto ds = small_dataset(6);
  const auto topics = fake_topics(ds, 10);
  const auto c = quick(Variant::kBaseline, 2);
  const auto with = train(ds, &topics, c), without = train(ds, nullptr, c);
  CHECK(with.model == without.model);
  CHECK(with.report.epochs[0].interpretive_loss > 0.0);
  CHECK(with.report.lambda == 0.0);
}

TEST_CASE("missing topic vector names the video") {
  const auto ds = small_dataset(4);
  auto topics = fake_topics(ds, 10);
  const auto missing = ds.split(Split::kTrain)[1]->id;
  topics.erase(missing);
  try {
    train(ds, &topics, quick(Variant::kInterpretive, 1));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(missing) != std::string::npos);
  }
}

TEST_CASE("joint gradient is lambda times interpretive plus task") {
  const auto ds = small_dataset(1);
  CaptionModel m(ModelConfig{}, build_caption_vocabulary(ds), 5);
  const auto& v = ds.videos.front();
  const auto tokens = m.token_ids(tokenize(v.descriptions[0]));
  const std::vector<int> s = {1, 0, 0, 1, 0, 0, 0, 1, 0, 0};
  const double lambda = 0.3;

  m.params().zero_grad();
  {
    Tape t;
    t.backward(joint_loss(t, m, v.frames, tokens, &s, lambda).total);
  }
  std::map<std::string, Tensor> joint;
  for (const auto* p : m.params().all()) joint[p->name] = p->grad;

  m.params().zero_grad();
  {
    Tape t;
    t.backward(sentence_nll(t, m, encode(t, m, v.frames), tokens));
  }
  {
    Tape t;
    t.backward(interpretive_loss(t, m, encode(t, m, v.frames).mean_pooled, s), lambda);
  }
  for (const auto* p : m.params().all()) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      CHECK(p->grad[i] == doctest::Approx(joint[p->name][i]).epsilon(1e-12).scale(1e-12));
    }
  }
}

TEST_CASE("select_lambda with a single candidate returns it") {
  const auto ds = small_dataset(4);
  const auto topics = fake_topics(ds, 10);
  auto c = quick(Variant::kInterpretive, 1);
  c.validate = true;
  CHECK(select_lambda(ds, topics, {0.7}, c).best_lambda == 0.7);
  const auto two = select_lambda(ds, topics, {0.0, 1.0}, c);
  REQUIRE(two.scores.size() == 2);
  CHECK(two.scores[0].first == 0.0);
  CHECK(two.scores[1].first == 1.0);
  const double best = two.scores[1].second > two.scores[0].second ? 1.0 : 0.0;
  CHECK(two.best_lambda == best);
}

TEST_CASE("checkpoint save, load, save is identical") {
  const auto ds = small_dataset(3);
  const auto r = train(ds, nullptr, quick(Variant::kBaseline, 1));
  const auto first = serialize(to_json(r.model));
  CHECK(serialize(to_json(model_from_json(nlohmann::json::parse(first)))) == first);
}

TEST_CASE("report covers every epoch and validation when enabled") {
  const auto ds = small_dataset(4);
  auto c = quick(Variant::kBaseline, 3);
  c.validate = true;
  const auto r = train(ds, nullptr, c);
  CHECK(r.report.epochs.size() == 3);
  for (const auto& e : r.report.epochs) CHECK(e.val_bleu.has_value());
  CHECK(r.report.best_val_bleu.has_value());
}

TEST_CASE("train config JSON overrides") {
  const auto c = train_config_from_json({{"lambda", 0.5}, {"epochs", 4}});
  CHECK(c.lambda == 0.5);
  CHECK(c.epochs == 4);
  CHECK(c.batch_size == 8);
  CHECK_THROWS_AS(variant_from_string("LSTM-X"), ConfigError);
}
