#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicap/adadelta.hpp"
#include "topicap/bleu.hpp"
#include "topicap/captioner.hpp"
#include "topicap/corpus.hpp"
#include "topicap/trainer.hpp"

namespace topicap {

nlohmann::json to_json(const BleuReport& r);

// Greedy (or beam) captions of `videos` scored against their descriptions.
BleuReport caption_bleu_report(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos,
                               int max_len = 20, int beam = 1);

struct PrfCounts {
  long tp = 0, fp = 0, fn = 0;
  double precision() const;  // 0 when nothing was predicted
  double recall() const;     // 0 when nothing was relevant
  double f1() const;
};

struct TopicF1Report {
  std::vector<PrfCounts> per_topic;
  PrfCounts micro;
};

// Predicted bit = score >= threshold.
TopicF1Report topic_f1(const std::vector<std::vector<double>>& scores, const std::vector<std::vector<int>>& truth,
                       double threshold = 0.5);
TopicF1Report topic_f1(const CaptionModel& model, const std::vector<const SyntheticVideo*>& videos,
                       const TopicVectorMap& topics, double threshold = 0.5);

nlohmann::json to_json(const TopicF1Report& r);

struct TransferConfig {
  Variant variant = Variant::kInterpretive;
  int hidden = 32;
  int epochs = 60;
  int batch_size = 8;
  std::uint64_t seed = 1;
  AdadeltaOptions adadelta;
  double init_range = 0.08;
  ModelConfig encoder;  // architecture of the random encoder for LSTM-R
};

struct TransferReport {
  std::string variant;
  std::uint64_t seed = 0;
  int num_classes = 0;
  int train_size = 0;
  int test_size = 0;
  double train_accuracy = 0.0;
  double accuracy = 0.0;  // on the held-out half
};

nlohmann::json to_json(const TransferReport& r);

// Action recognition on mean-pooled encoder features. All videos of the dataset
// are pooled and split in half at random (seeded). A two-layer perceptron
// (tanh hidden layer, softmax output) is trained with cross-entropy. For LSTM-B
// and LSTM-I the encoder comes from `checkpoint` and stays frozen; for LSTM-R a
// random encoder is trained jointly and `checkpoint` is ignored.
TransferReport transfer_train_eval(const Dataset& dataset, const CaptionModel* checkpoint,
                                   const TransferConfig& config);

}  // namespace topicap
