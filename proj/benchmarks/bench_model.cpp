#include <benchmark/benchmark.h>

#include "taskimp/model.hpp"

namespace {

using namespace taskimp;

void BM_Forward(benchmark::State& state) {
  const Dims dims{1, 24, 24};
  const auto p = init_params(MlpArch{3, static_cast<std::size_t>(state.range(0))}, dims, 1);
  std::vector<double> x(24, 0.5);
  ModelEvaluator ev(p);
  for (auto _ : state) benchmark::DoNotOptimize(ev.forward(x).data());
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128);

void BM_ForwardVjp(benchmark::State& state) {
  const Dims dims{1, 24, 24};
  const auto p = init_params(MlpArch{3, static_cast<std::size_t>(state.range(0))}, dims, 1);
  std::vector<double> x(24, 0.5), seed(24, 1.0), grad(p.size());
  ModelEvaluator ev(p);
  for (auto _ : state) {
    ev.forward(x);
    ev.vjp(seed, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_ForwardVjp)->Arg(32)->Arg(128);

void BM_FullJacobian(benchmark::State& state) {
  const Dims dims{1, 24, 24};
  const auto p = init_params(MlpArch{3, 128}, dims, 1);
  std::vector<double> x(24, 0.5);
  for (auto _ : state) {
    auto j = output_jacobian(p, x);
    benchmark::DoNotOptimize(j.data().data());
  }
}
BENCHMARK(BM_FullJacobian);

}  // namespace

BENCHMARK_MAIN();
