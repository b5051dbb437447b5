#include "topicap/evaluation.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "topicap/errors.hpp"

namespace topicap {

nlohmann::json to_json(const BleuReport& r) {
  return {{"bleu", r.bleu},
          {"precisions", r.precisions},
          {"matches", r.matches},
          {"totals", r.totals},
          {"brevity_penalty", r.brevity_penalty},
          {"candidate_length", r.candidate_length},
          {"reference_length", r.reference_length}};
}

BleuReport caption_bleu_report(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos,
                               int max_len, int beam) {
  std::vector<Sentence> candidates;
  std::vector<std::vector<Sentence>> references;
  for (const auto* v : videos) {
    candidates.push_back(generate(model, v->frames, max_len, beam).words(model));
    std::vector<Sentence> refs;
    for (const auto& d : v->descriptions) refs.push_back(tokenize(d, false));
    references.push_back(std::move(refs));
  }
  return bleu4(candidates, references);
}

double PrfCounts::precision() const { return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
double PrfCounts::recall() const { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
double PrfCounts::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

TopicF1Report topic_f1(const std::vector<std::vector<double>>& scores, const std::vector<std::vector<int>>& truth,
                       double threshold) {
  if (scores.size() != truth.size()) throw DimensionError("topic_f1: score and truth counts differ");
  TopicF1Report report;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (scores[k].size() != truth[k].size()) throw DimensionError("topic_f1: score and truth lengths differ");
    if (report.per_topic.size() < scores[k].size()) report.per_topic.resize(scores[k].size());
    for (std::size_t i = 0; i < scores[k].size(); ++i) {
      const bool predicted = scores[k][i] >= threshold;
      const bool actual = truth[k][i] != 0;
      auto& c = report.per_topic[i];
      if (predicted && actual) ++c.tp;
      if (predicted && !actual) ++c.fp;
      if (!predicted && actual) ++c.fn;
    }
  }
  for (const auto& c : report.per_topic) {
    report.micro.tp += c.tp;
    report.micro.fp += c.fp;
    report.micro.fn += c.fn;
  }
  return report;
}

TopicF1Report topic_f1(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos,
                       const TopicVectorMap& topics, double threshold) {
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<int>> truth;
  for (const auto* v : videos) {
    auto it = topics.find(v->id);
    if (it == topics.end()) throw DataError("no topic vector for video '" + v->id + "'");
    scores.push_back(predict_topics(model, video_features(model, v->frames).mean_pooled));
    truth.push_back(it->second);
  }
  return topic_f1(scores, truth, threshold);
}

nlohmann::json to_json(const TopicF1Report& r) {
  const auto counts = [](const PrfCounts& c) {
    return nlohmann::json{{"tp", c.tp},
                          {"fp", c.fp},
                          {"fn", c.fn},
                          {"precision", c.precision()},
                          {"recall", c.recall()},
                          {"f1", c.f1()}};
  };
  nlohmann::json per_topic = nlohmann::json::array();
  for (const auto& c : r.per_topic) per_topic.push_back(counts(c));
  return {{"per_topic", per_topic}, {"micro", counts(r.micro)}};
}

nlohmann::json to_json(const TransferReport& r) {
  return {{"variant", r.variant},         {"seed", r.seed},
          {"num_classes", r.num_classes}, {"train_size", r.train_size},
          {"test_size", r.test_size},     {"train_accuracy", r.train_accuracy},
          {"accuracy", r.accuracy}};
}

namespace {

Tensor uniform(Shape shape, double range, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-range, range);
  for (double& x : t.data()) x = u(rng);
  return t;
}

Var classify(Tape& tape, const ParameterSet& cls, Var features) {
  Var h = tanh(add(matvec(tape.param(cls.get("cls.W1")), features), tape.param(cls.get("cls.b1"))));
  return add(matvec(tape.param(cls.get("cls.W2")), h), tape.param(cls.get("cls.b2")));
}

std::size_t argmax(const Tensor& t) {
  const auto& d = t.data();
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

}  // namespace

TransferReport transfer_train_eval(const Dataset& dataset, const CaptionModel* checkpoint,
                                   const TransferConfig& config) {
  const bool frozen = config.variant != Variant::kRandom;
  if (frozen && !checkpoint) {
    throw ConfigError("transfer with " + to_string(config.variant) + " needs a captioning checkpoint");
  }
  if (config.epochs < 0 || config.batch_size < 1 || config.hidden < 1) throw ConfigError("invalid transfer config");
  if (dataset.videos.size() < 2) throw DataError("transfer needs at least two videos");

  // action labels that occur -> dense class indices
  std::map<int, std::size_t> classes;
  for (const auto& v : dataset.videos) classes.emplace(v.action_label, 0);
  std::size_t next = 0;
  for (auto& [id, k] : classes) k = next++;

  std::vector<std::size_t> order(dataset.videos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 split_rng(derive_seed(config.seed, 0x5B117ULL));
  std::shuffle(order.begin(), order.end(), split_rng);
  const std::size_t half = order.size() / 2;
  const std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());

  CaptionModel encoder;
  if (frozen) {
    encoder = *checkpoint;
  } else {
    ModelConfig mc = config.encoder;
    mc.input_dim = dataset.manifest.config.feature_dim;
    encoder = CaptionModel(mc, {}, derive_seed(config.seed, 0xE7C0ULL));
  }
  const auto dv = static_cast<std::size_t>(encoder.config().feature_dim());
  const auto hidden = static_cast<std::size_t>(config.hidden);

  ParameterSet cls;
  std::mt19937_64 init_rng(derive_seed(config.seed, 0xC1A55ULL));
  cls.add("cls.W1", uniform({hidden, dv}, config.init_range, init_rng));
  cls.add("cls.b1", Tensor({hidden}));
  cls.add("cls.W2", uniform({classes.size(), hidden}, config.init_range, init_rng));
  cls.add("cls.b2", Tensor({classes.size()}));

  std::vector<Parameter*> trainable = cls.all();
  if (!frozen) {
    for (auto& [name, p] : encoder.params()) {
      if (CaptionModel::is_encoder_parameter(name)) trainable.push_back(&p);
    }
  }

  // frozen encoders only need their features once
  std::vector<Tensor> cached(dataset.videos.size());
  if (frozen) {
    for (std::size_t i = 0; i < dataset.videos.size(); ++i) {
      cached[i] = Tensor::vector(video_features(encoder, dataset.videos[i].frames).mean_pooled);
    }
  }
  const auto features = [&](Tape& tape, std::size_t i) {
    return frozen ? tape.constant(cached[i]) : encode(tape, encoder, dataset.videos[i].frames).mean_pooled;
  };
  const auto label = [&](std::size_t i) { return classes.at(dataset.videos[i].action_label); };

  AdadeltaState state;
  std::mt19937_64 rng(derive_seed(config.seed, 0x7EA1ULL));
  auto epoch_order = train_idx;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(epoch_order.begin(), epoch_order.end(), rng);
    for (std::size_t b0 = 0; b0 < epoch_order.size(); b0 += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t b1 = std::min(epoch_order.size(), b0 + static_cast<std::size_t>(config.batch_size));
      cls.zero_grad();
      encoder.params().zero_grad();
      for (std::size_t k = b0; k < b1; ++k) {
        Tape tape;
        Var loss = cross_entropy(classify(tape, cls, features(tape, epoch_order[k])), label(epoch_order[k]));
        tape.backward(loss, 1.0 / static_cast<double>(b1 - b0));
      }
      adadelta_step(trainable, state, config.adadelta);
    }
  }

  const auto accuracy = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    long correct = 0;
    for (std::size_t i : idx) {
      Tape tape(false);
      if (argmax(classify(tape, cls, features(tape, i)).value()) == label(i)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(idx.size());
  };

  TransferReport report;
  report.variant = to_string(config.variant);
  report.seed = config.seed;
  report.num_classes = static_cast<int>(classes.size());
  report.train_size = static_cast<int>(train_idx.size());
  report.test_size = static_cast<int>(test_idx.size());
  report.train_accuracy = accuracy(train_idx);
  report.accuracy = accuracy(test_idx);
  return report;
}

}  // namespace topicap
