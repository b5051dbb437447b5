#include <benchmark/benchmark.h>

#include "topicap/lda.hpp"

using namespace topicap;

namespace {

const Dataset& dataset() {
  static const Dataset d = generate_dataset(DatasetConfig{}, 1);
  return d;
}

}  // namespace

static void BM_LdaFit(benchmark::State& state) {
  const auto corpus = build_corpus(dataset(), Split::kTrain);
  LdaConfig config;
  config.sweeps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit(corpus, config).topic_totals);
}
BENCHMARK(BM_LdaFit)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_TopicVectors(benchmark::State& state) {
  LdaConfig config;
  config.sweeps = 50;
  const auto model = fit(build_corpus(dataset(), Split::kTrain), config);
  for (auto _ : state) benchmark::DoNotOptimize(topic_vectors(model, dataset(), {}, 1).size());
}
BENCHMARK(BM_TopicVectors)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
