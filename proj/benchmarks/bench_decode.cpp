#include <benchmark/benchmark.h>

#include "topw/baselines.hpp"
#include "topw/decoder.hpp"
#include "topw/trace.hpp"

namespace {

using namespace topw;

// One synthetic trace at production scale, built once.
struct Fixture {
  TraceBundle trace;
  TokenMetric metric;

  static const Fixture& get() {
    static const Fixture f = [] {
      SynthOptions o;
      o.n = 32000;
      o.m = 1024;
      o.steps = 8;
      o.seed = 7;
      Fixture out{synth_trace(o), {}};
      out.metric = build_metric(out.trace.embedding_matrix());
      return out;
    }();
    return f;
  }
};

void BM_TopW(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  TopWConfig cfg;
  cfg.top_m = static_cast<std::size_t>(state.range(0));
  std::size_t step = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(process_logits(f.trace.step_logits(step), f.metric, cfg));
    step = (step + 1) % f.trace.meta.steps;
  }
}
BENCHMARK(BM_TopW)->Arg(600)->Arg(1200)->Unit(benchmark::kMicrosecond);

void BM_Baseline(benchmark::State& state, BaselineRule rule) {
  const Fixture& f = Fixture::get();
  const BaselineConfig cfg{rule, 1.0};
  std::size_t step = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_baseline(f.trace.step_logits(step), cfg));
    step = (step + 1) % f.trace.meta.steps;
  }
}
BENCHMARK_CAPTURE(BM_Baseline, top_p, BaselineRule{TopP{0.9}})->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Baseline, top_k, BaselineRule{TopK{50}})->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Baseline, min_p, BaselineRule{MinP{0.1}})->Unit(benchmark::kMicrosecond);

void BM_Metric(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  const EmbeddingMatrix emb = f.trace.embedding_matrix();
  for (auto _ : state) benchmark::DoNotOptimize(build_metric(emb));
}
BENCHMARK(BM_Metric)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace
BENCHMARK_MAIN();
