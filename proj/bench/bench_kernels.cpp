// Serial reference vs OpenMP batch gradient on a model the size of the default setup.

#include <random>

#include <benchmark/benchmark.h>

#include "s2srl/seq2seq_model.hpp"

using namespace s2srl;

namespace {

std::vector<WeightedSequence> make_batch(std::size_t n, std::size_t vocab) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<TokenId> tok(kNumReserved, static_cast<TokenId>(vocab) - 1);
  std::vector<WeightedSequence> items(n);
  for (auto& it : items) {
    it.source.resize(4 + gen() % 12);
    it.target.resize(3 + gen() % 8);
    for (auto& t : it.source) t = tok(gen);
    for (auto& t : it.target) t = tok(gen);
    it.target.push_back(kEos);
  }
  return items;
}

void run(benchmark::State& state, ExecPolicy policy) {
  const bool attention = state.range(1) != 0;
  const ModelParams p = ModelParams::random({200, 32, 64, attention}, 0.08, 1);
  const auto items = make_batch(static_cast<std::size_t>(state.range(0)), 200);
  Gradient g;
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient(p, items, g, policy));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchGradientSerial(benchmark::State& s) { run(s, ExecPolicy::kSerial); }
void BM_BatchGradientParallel(benchmark::State& s) { run(s, ExecPolicy::kParallel); }

}  // namespace

BENCHMARK(BM_BatchGradientSerial)->ArgsProduct({{8, 32, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientParallel)->ArgsProduct({{8, 32, 128}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
