#include "topicap/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "topicap/bleu.hpp"
#include "topicap/errors.hpp"

namespace topicap {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "LSTM-B";
    case Variant::kInterpretive: return "LSTM-I";
    case Variant::kRandom: return "LSTM-R";
  }
  return "LSTM-I";
}

Variant variant_from_string(const std::string& s) {
  if (s == "LSTM-B" || s == "B" || s == "b") return Variant::kBaseline;
  if (s == "LSTM-I" || s == "I" || s == "i") return Variant::kInterpretive;
  if (s == "LSTM-R" || s == "R" || s == "r") return Variant::kRandom;
  throw ConfigError("unknown variant '" + s + "' (expected LSTM-B, LSTM-I or LSTM-R)");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"variant", to_string(c.variant)},
          {"lambda", c.lambda},
          {"rho", c.adadelta.rho},
          {"epsilon", c.adadelta.epsilon},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"clip_norm", c.clip_norm},
          {"max_caption_length", c.max_caption_length},
          {"validate", c.validate},
          {"model", to_json(c.model)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  const auto set = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  if (j.contains("variant")) c.variant = variant_from_string(j.at("variant"));
  set("lambda", c.lambda);
  set("rho", c.adadelta.rho);
  set("epsilon", c.adadelta.epsilon);
  set("epochs", c.epochs);
  set("batch_size", c.batch_size);
  set("seed", c.seed);
  set("clip_norm", c.clip_norm);
  set("max_caption_length", c.max_caption_length);
  set("validate", c.validate);
  if (j.contains("model")) c.model = model_config_from_json(j.at("model"), c.model);
  return c;
}

nlohmann::json to_json(const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"task_loss", e.task_loss},
                      {"task_loss_per_word", e.task_loss_per_word},
                      {"interpretive_loss", e.interpretive_loss},
                      {"val_bleu", e.val_bleu ? nlohmann::json(*e.val_bleu) : nlohmann::json(nullptr)},
                      {"seconds", e.seconds}});
  }
  return {{"schema_version", 1},
          {"variant", r.variant},
          {"lambda", r.lambda},
          {"seed", r.seed},
          {"epochs", epochs},
          {"best_epoch", r.best_epoch},
          {"best_val_bleu", r.best_val_bleu ? nlohmann::json(*r.best_val_bleu) : nlohmann::json(nullptr)},
          {"wall_seconds", r.wall_seconds},
          {"checkpoint_path", r.checkpoint_path}};
}

std::vector<std::string> build_caption_vocabulary(const Dataset& dataset) {
  Vocabulary vocab;
  for (const auto* v : dataset.split(Split::kTrain)) {
    for (const auto& d : v->descriptions) {
      for (const auto& t : tokenize(d, false)) vocab.add(t);
    }
  }
  return vocab.words();
}

double caption_bleu(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos, int max_len) {
  std::vector<Sentence> candidates;
  std::vector<std::vector<Sentence>> references;
  for (const auto* v : videos) {
    candidates.push_back(generate(model, v->frames, max_len, 1).words(model));
    std::vector<Sentence> refs;
    for (const auto& d : v->descriptions) refs.push_back(tokenize(d, false));
    references.push_back(std::move(refs));
  }
  if (candidates.empty()) return 0.0;
  return bleu4(candidates, references).bleu;
}

namespace {

void clip_gradients(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (auto* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double s = max_norm / norm;
  for (auto* p : params)
    for (double& g : p->grad.data()) g *= s;
}

}  // namespace

TrainResult train(const Dataset& dataset, const TopicVectorMap* topics, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (config.variant == Variant::kRandom) {
    throw ConfigError("LSTM-R has no captioning stage; it is trained by the transfer experiment");
  }
  if (config.lambda < 0) throw ConfigError("lambda must be >= 0");
  if (config.variant == Variant::kInterpretive && config.lambda == 0.0) {
    throw ConfigError("LSTM-I requires lambda > 0 (lambda = 0 is LSTM-B)");
  }
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  const double lambda = config.effective_lambda();
  const auto train_videos = dataset.split(Split::kTrain);
  if (train_videos.empty()) throw DataError("training split is empty");

  ModelConfig mc = config.model;
  mc.input_dim = dataset.manifest.config.feature_dim;
  std::vector<const std::vector<int>*> video_topics(train_videos.size(), nullptr);
  for (std::size_t i = 0; i < train_videos.size(); ++i) {
    const auto* v = train_videos[i];
    if (topics) {
      auto it = topics->find(v->id);
      if (it != topics->end()) {
        if (static_cast<int>(it->second.size()) != mc.num_topics) {
          throw DataError("topic vector of video '" + v->id + "' has length " + std::to_string(it->second.size()) +
                          ", model expects " + std::to_string(mc.num_topics));
        }
        video_topics[i] = &it->second;
      }
    }
    if (!video_topics[i] && lambda > 0) throw DataError("no topic vector for training video '" + v->id + "'");
  }

  CaptionModel model(mc, build_caption_vocabulary(dataset), config.seed);
  model.meta().variant = to_string(config.variant);
  model.meta().lambda = lambda;

  struct Pair {
    std::size_t video;
    std::vector<int> tokens;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < train_videos.size(); ++i) {
    for (const auto& d : train_videos[i]->descriptions) {
      auto tokens = tokenize(d, true);
      if (tokens.empty()) continue;
      pairs.push_back({i, model.token_ids(tokens)});
    }
  }
  if (pairs.empty()) throw DataError("training split has no descriptions");

  const auto val_videos = dataset.split(Split::kVal);
  auto params = model.params().all();
  AdadeltaState optimizer;
  std::mt19937_64 rng(derive_seed(config.seed, 0x7A11ULL));
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainReport report;
  report.variant = to_string(config.variant);
  report.lambda = lambda;
  report.seed = config.seed;
  const auto start = std::chrono::steady_clock::now();
  std::optional<ParameterSet> best_params;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double task_sum = 0.0, interp_sum = 0.0;
    long words = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(config.batch_size));
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      model.params().zero_grad();
      for (std::size_t k = b0; k < b1; ++k) {
        const auto& pair = pairs[order[k]];
        Tape tape;
        auto loss = joint_loss(tape, model, train_videos[pair.video]->frames, pair.tokens, video_topics[pair.video],
                               lambda);
        tape.backward(loss.total, inv);
        task_sum += loss.task;
        interp_sum += loss.interpretive;
        words += static_cast<long>(pair.tokens.size());
      }
      if (config.clip_norm > 0) clip_gradients(params, config.clip_norm);
      adadelta_step(params, optimizer, config.adadelta);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.task_loss = task_sum / static_cast<double>(pairs.size());
    stats.task_loss_per_word = task_sum / static_cast<double>(words);
    stats.interpretive_loss = interp_sum / static_cast<double>(pairs.size());
    if (config.validate && !val_videos.empty()) {
      stats.val_bleu = caption_bleu(model, val_videos, config.max_caption_length);
      if (!report.best_val_bleu || *stats.val_bleu > *report.best_val_bleu) {
        report.best_val_bleu = stats.val_bleu;
        report.best_epoch = epoch;
        best_params = model.params();
      }
    } else {
      report.best_epoch = epoch;
    }
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }

  if (best_params) {
    for (auto& [name, p] : model.params()) p.value = best_params->get(name).value;
  }
  model.params().zero_grad();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(model), std::move(report)};
}

LambdaSelection select_lambda(const Dataset& dataset, const TopicVectorMap& topics,
                              const std::vector<double>& candidates, const TrainConfig& config) {
  if (candidates.empty()) throw ConfigError("select_lambda: no candidates");
  LambdaSelection out;
  if (candidates.size() == 1) {
    out.best_lambda = candidates.front();
    return out;
  }
  if (dataset.split(Split::kVal).empty()) throw DataError("select_lambda: validation split is empty");
  std::optional<double> best_score;
  for (double lambda : candidates) {
    TrainConfig c = config;
    c.lambda = lambda;
    c.variant = lambda == 0.0 ? Variant::kBaseline : Variant::kInterpretive;
    auto result = train(dataset, &topics, c);
    const double score = result.report.best_val_bleu.value_or(0.0);
    out.scores.emplace_back(lambda, score);
    if (!best_score || score > *best_score || (score == *best_score && lambda < out.best_lambda)) {
      best_score = score;
      out.best_lambda = lambda;
    }
  }
  return out;
}

}  // namespace topicap
