#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "agegloh/dataset.hpp"
#include "agegloh/gloh.hpp"
#include "agegloh/imageio.hpp"
#include "agegloh/mtl.hpp"
#include "agegloh/rng.hpp"

namespace {

agegloh::GrayImage noise_image(int h, int w) {
  agegloh::Rng rng(1);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(h) * w);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng.below(256));
  return agegloh::make_image(h, w, std::move(px));
}

agegloh::SynthData synth(int K, int N) {
  agegloh::SynthSpec spec;
  spec.K = K;
  spec.N = N;
  spec.support_size = std::min(10, K);
  spec.seed = 3;
  return agegloh::synth_generate(spec);
}

void BM_ExtractGloh(benchmark::State& state) {
  const auto img = noise_image(68, 62);
  const agegloh::GlohParams params;
  for (auto _ : state) benchmark::DoNotOptimize(agegloh::extract_gloh(img, params));
}
BENCHMARK(BM_ExtractGloh)->Unit(benchmark::kMicrosecond);

void BM_Solve(benchmark::State& state) {
  const auto d = synth(static_cast<int>(state.range(0)), 200);
  const double lambda = 0.3 * agegloh::lambda_max(d.tasks, agegloh::Penalty::MultiTask);
  for (auto _ : state)
    benchmark::DoNotOptimize(agegloh::solve(d.tasks, lambda, agegloh::SolverOptions{}));
}
BENCHMARK(BM_Solve)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_FitForBudget(benchmark::State& state) {
  const auto d = synth(static_cast<int>(state.range(0)), 200);
  for (auto _ : state)
    benchmark::DoNotOptimize(agegloh::fit_for_budget(d.tasks, 20, agegloh::SolverOptions{}));
}
BENCHMARK(BM_FitForBudget)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
