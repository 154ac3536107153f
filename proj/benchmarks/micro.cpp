#include <benchmark/benchmark.h>

#include "cfseq/harness.hpp"

namespace {

using namespace cfseq;

const Workspace& workspace() {
  static const Workspace ws = [] {
    ExperimentSpec spec;
    spec.seed = 7;
    spec.dataset.synthesis.seed = 7;
    spec.threads = 1;
    return prepare_workspace(spec);
  }();
  return ws;
}

void BM_ssdld(benchmark::State& state) {
  const auto& ws = workspace();
  const auto kind = state.range(0) == 0 ? CostKind::Euclidean : CostKind::Count;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& a = ws.train[i % ws.train.size()];
    const auto& b = ws.train[(i * 7 + 3) % ws.train.size()];
    benchmark::DoNotOptimize(ssdld_distance(a, b, kind, ws.encoder.layout()));
    ++i;
  }
}
BENCHMARK(BM_ssdld)->Arg(0)->Arg(1);

void BM_feasibility(benchmark::State& state) {
  const auto& ws = workspace();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ws.feasibility_model.feasibility(ws.train[i++ % ws.train.size()]));
  }
}
BENCHMARK(BM_feasibility);

void BM_score(benchmark::State& state) {
  const auto& ws = workspace();
  const ViabilityEvaluator evaluator(ws.test[ws.factuals[0]], *ws.predictor, ws.feasibility_model);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluator.score(ws.train[i++ % ws.train.size()]));
  }
}
BENCHMARK(BM_score);

void BM_evolve_cycles(benchmark::State& state) {
  const auto& ws = workspace();
  const ViabilityEvaluator evaluator(ws.test[ws.factuals[0]], *ws.predictor, ws.feasibility_model);
  auto config = EvoConfig::from_name("CBI-RWS-OPC-SBM-FSR");
  config.cycles = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evolve(config, ws.context(evaluator)));
  }
}
BENCHMARK(BM_evolve_cycles)->Arg(0)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
