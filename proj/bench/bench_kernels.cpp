// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "missa/experiment.hpp"
#include "missa/optimizer.hpp"

using namespace missa;

namespace {

RunConfig wide_config(int chains, long budget) {
  auto config = build_experiment(Method::M1, 5, {.budget = budget, .seed = 1});
  for (int c = static_cast<int>(config.chains.size()); c < chains; ++c) {
    config.chains.push_back({Vector::Unit(7, c % 7), static_cast<std::uint64_t>(100 + c)});
  }
  return config;
}

void BM_StepSerial(benchmark::State& st) {
  const auto config = wide_config(static_cast<int>(st.range(0)), 1);
  MissaState state(config);
  long k = 0;
  for (auto _ : st) {
    missa_step(state, config, k, config.schedule.at(k));
    ++k;
  }
  st.SetItemsProcessed(st.iterations());
}

void BM_StepParallel(benchmark::State& st) {
  const auto config = wide_config(static_cast<int>(st.range(0)), 1);
  MissaState state(config);
  long k = 0;
  for (auto _ : st) {
    missa_step_parallel(state, config, k, config.schedule.at(k), static_cast<int>(st.range(1)));
    ++k;
  }
  st.SetItemsProcessed(st.iterations());
}

void BM_Run(benchmark::State& st) {
  auto config = wide_config(static_cast<int>(st.range(0)), 20000);
  config.stride = 100;
  config.threads = static_cast<int>(st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(run(config).best_f);
  st.SetItemsProcessed(st.iterations() * config.budget);
}

void BM_CesaroStructural(benchmark::State& st) {
  const auto p = study::illustration_matrix();
  for (auto _ : st) benchmark::DoNotOptimize(cesaro_limit(classify(p), p));
}

void BM_CesaroPowerAverage(benchmark::State& st) {
  const auto p = study::illustration_matrix();
  for (auto _ : st) benchmark::DoNotOptimize(cesaro_limit_oracle(p, st.range(0)));
}

}  // namespace

BENCHMARK(BM_StepSerial)->Arg(2)->Arg(8)->Arg(32);
BENCHMARK(BM_StepParallel)->Args({2, 2})->Args({8, 4})->Args({32, 4});
BENCHMARK(BM_Run)->Args({2, 1})->Args({2, 2})->Args({8, 1})->Args({8, 4});
BENCHMARK(BM_CesaroStructural);
BENCHMARK(BM_CesaroPowerAverage)->Arg(600)->Arg(60000);

BENCHMARK_MAIN();
