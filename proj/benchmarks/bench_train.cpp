#include <benchmark/benchmark.h>

#include "topicap/interpretation.hpp"
#include "topicap/trainer.hpp"
#include "topicap/workspace.hpp"

using namespace topicap;

namespace {

const Dataset& dataset() {
  static const Dataset d = generate_dataset(DatasetConfig{}, 1);
  return d;
}

const TopicVectorMap& topics() {
  static const TopicVectorMap t = [] {
    LdaConfig config;
    config.sweeps = 50;
    return infer_topic_bits(fit(build_corpus(dataset(), Split::kTrain), config), dataset());
  }();
  return t;
}

}  // namespace

static void BM_TrainEpoch(benchmark::State& state) {
  TrainConfig config;
  config.variant = state.range(0) ? Variant::kInterpretive : Variant::kBaseline;
  config.epochs = 1;
  config.validate = false;
  for (auto _ : state) benchmark::DoNotOptimize(train(dataset(), &topics(), config).report.epochs.size());
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_GreedyCaption(benchmark::State& state) {
  const CaptionModel m(ModelConfig{}, build_caption_vocabulary(dataset()), 1);
  const auto& frames = dataset().videos.front().frames;
  for (auto _ : state) benchmark::DoNotOptimize(generate(m, frames, 20, static_cast<int>(state.range(0))).tokens);
}
BENCHMARK(BM_GreedyCaption)->Arg(1)->Arg(5);

static void BM_BuildMap(benchmark::State& state) {
  const CaptionModel m(ModelConfig{}, build_caption_vocabulary(dataset()), 1);
  for (auto _ : state) benchmark::DoNotOptimize(build_map(m, dataset().split(Split::kTrain), topics()));
}
BENCHMARK(BM_BuildMap)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
