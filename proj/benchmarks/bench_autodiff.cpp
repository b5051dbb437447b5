#include <benchmark/benchmark.h>

#include <random>

#include "topicap/autodiff.hpp"
#include "topicap/captioner.hpp"

using namespace topicap;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(std::move(shape));
  for (auto& x : t.data()) x = u(rng);
  return t;
}

Frames random_frames(int n, int d) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Frames f(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
  for (auto& r : f) {
    for (auto& x : r) x = u(rng);
  }
  return f;
}

}  // namespace

static void BM_MatvecBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Parameter w("w", random_tensor({n, n}, 1));
  const auto x = random_tensor({n}, 2);
  for (auto _ : state) {
    w.zero_grad();
    Tape t;
    t.backward(squared_norm(tanh(matvec(t.param(w), t.constant(x)))));
    benchmark::DoNotOptimize(w.grad.data().data());
  }
}
BENCHMARK(BM_MatvecBackward)->Arg(16)->Arg(64)->Arg(128);

static void BM_EncodeForward(benchmark::State& state) {
  const CaptionModel m(ModelConfig{}, {"a", "b", "c"}, 1);
  const auto frames = random_frames(static_cast<int>(state.range(0)), 16);
  for (auto _ : state) benchmark::DoNotOptimize(video_features(m, frames).mean_pooled);
}
BENCHMARK(BM_EncodeForward)->Arg(8)->Arg(28);

static void BM_JointLossBackward(benchmark::State& state) {
  CaptionModel m(ModelConfig{}, {"a", "man", "rides", "horse"}, 1);
  const auto frames = random_frames(8, 16);
  const auto tokens = m.token_ids({"a", "man", "rides", "a", "horse", "<eos>"});
  const std::vector<int> topics = {1, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  for (auto _ : state) {
    m.params().zero_grad();
    Tape t;
    t.backward(joint_loss(t, m, frames, tokens, &topics, 0.1).total);
  }
}
BENCHMARK(BM_JointLossBackward);

BENCHMARK_MAIN();
