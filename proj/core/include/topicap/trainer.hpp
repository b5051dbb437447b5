#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicap/adadelta.hpp"
#include "topicap/captioner.hpp"
#include "topicap/corpus.hpp"

namespace topicap {

// LSTM-B: captioning loss only. LSTM-I: captioning + interpretive loss.
// LSTM-R: randomly initialised encoder trained directly on the transfer task.
enum class Variant { kBaseline, kInterpretive, kRandom };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

using TopicVectorMap = std::map<std::string, std::vector<int>>;

struct TrainConfig {
  Variant variant = Variant::kInterpretive;
  double lambda = 0.1;
  AdadeltaOptions adadelta;
  int epochs = 30;
  int batch_size = 8;
  std::uint64_t seed = 1;
  double clip_norm = 0.0;  // 0 disables clipping
  int max_caption_length = 20;
  bool validate = true;
  ModelConfig model;

  // lambda actually used for gradients (0 for LSTM-B).
  double effective_lambda() const { return variant == Variant::kBaseline ? 0.0 : lambda; }
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct EpochStats {
  int epoch = 0;
  double task_loss = 0.0;          // mean per pair
  double task_loss_per_word = 0.0;
  double interpretive_loss = 0.0;  // mean per pair (reported even when lambda = 0)
  std::optional<double> val_bleu;
  double seconds = 0.0;
};

struct TrainReport {
  std::string variant;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  std::optional<double> best_val_bleu;
  double wall_seconds = 0.0;
  std::string checkpoint_path;
};

nlohmann::json to_json(const TrainReport& r);

struct TrainResult {
  CaptionModel model;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Words of the train-split descriptions in order of first occurrence.
std::vector<std::string> build_caption_vocabulary(const Dataset& dataset);

// One training example per (video, description) pair of the train split.
// `topics` must cover every training video unless the variant is LSTM-B.
TrainResult train(const Dataset& dataset, const TopicVectorMap* topics, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct LambdaSelection {
  double best_lambda = 0.0;
  std::vector<std::pair<double, double>> scores;  // (lambda, validation BLEU-4)
};

// Trains one model per candidate and keeps the one with the highest validation
// BLEU-4; ties go to the smaller lambda.
LambdaSelection select_lambda(const Dataset& dataset, const TopicVectorMap& topics,
                              const std::vector<double>& candidates, const TrainConfig& config);

// Corpus BLEU-4 of greedy captions against each video's descriptions.
double caption_bleu(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos,
                    int max_len = 20);

}  // namespace topicap
