#pragma once

// Default-configuration artifacts (dataset, LDA, checkpoints, maps) built on
// demand and cached in a workspace directory so repeated runs reuse them.

#include <iostream>
#include <map>
#include <optional>

#include "topicap/interpretation.hpp"
#include "topicap/trainer.hpp"
#include "topicap/workspace.hpp"

namespace cache {

using namespace topicap;

class PipelineCache {
 public:
  explicit PipelineCache(fs::path root, std::ostream& log = std::cerr) : ws_(std::move(root)), log_(log) {
    ws_.create_layout();
  }

  const Workspace& workspace() const { return ws_; }

  const Dataset& dataset() {
    if (!dataset_) {
      if (fs::exists(ws_.dataset())) {
        dataset_ = load_dataset(ws_.dataset());
      } else {
        log_ << "generating dataset\n";
        dataset_ = generate_dataset(DatasetConfig{}, 1);
        write_json_atomic(ws_.dataset(), to_json(*dataset_));
      }
    }
    return *dataset_;
  }

  const TopicModel& lda() {
    if (!lda_) {
      if (fs::exists(ws_.lda())) {
        lda_ = load_lda(ws_.lda());
      } else {
        log_ << "fitting LDA\n";
        lda_ = fit(build_corpus(dataset(), Split::kTrain), LdaConfig{});
        write_json_atomic(ws_.lda(), to_json(*lda_));
      }
    }
    return *lda_;
  }

  const TopicVectorMap& topics() {
    if (!topics_) topics_ = infer_topic_bits(lda(), dataset());
    return *topics_;
  }

  const CaptionModel& model(Variant variant, std::uint64_t seed) {
    const auto key = std::make_pair(static_cast<int>(variant), seed);
    auto it = models_.find(key);
    if (it != models_.end()) return it->second;
    const auto path = ws_.checkpoint(to_string(variant), seed);
    if (fs::exists(path)) return models_.emplace(key, load_checkpoint(path)).first->second;
    TrainConfig config;
    config.variant = variant;
    config.seed = seed;
    const auto& data = dataset();
    const auto& bits = topics();
    log_ << "training " << to_string(variant) << " seed " << seed << " (" << config.epochs << " epochs)\n";
    auto result = train(data, &bits, config);
    result.model.meta().seed = seed;
    write_json_atomic(path, to_json(result.model));
    write_json_atomic(ws_.report("train_" + to_string(variant) + "_s" + std::to_string(seed)),
                      to_json(result.report));
    return models_.emplace(key, std::move(result.model)).first->second;
  }

  const NeuronTopicMap& map(Variant variant, std::uint64_t seed) {
    const auto key = std::make_pair(static_cast<int>(variant), seed);
    auto it = maps_.find(key);
    if (it != maps_.end()) return it->second;
    const auto path = ws_.map(to_string(variant), seed);
    if (fs::exists(path)) return maps_.emplace(key, neuron_map_from_json(read_json(path))).first->second;
    auto map = build_map(model(variant, seed), dataset().split(Split::kTrain), topics());
    write_json_atomic(path, to_json(map));
    return maps_.emplace(key, std::move(map)).first->second;
  }

 private:
  Workspace ws_;
  std::ostream& log_;
  std::optional<Dataset> dataset_;
  std::optional<TopicModel> lda_;
  std::optional<TopicVectorMap> topics_;
  std::map<std::pair<int, std::uint64_t>, CaptionModel> models_;
  std::map<std::pair<int, std::uint64_t>, NeuronTopicMap> maps_;
};

}  // namespace cache
