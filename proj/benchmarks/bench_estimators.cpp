// Estimator cost as the number of training samples and segments grows.

#include <benchmark/benchmark.h>

#include "taskimp/gain.hpp"
#include "taskimp/rng.hpp"

namespace {

using namespace taskimp;

struct Problem {
  SampleSet train;
  SampleSet eval;
  ImputationSet first;
  ImputationSet second;
  ModelParams params;
};

std::vector<double> normals(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = standard_normal(rng);
  return v;
}

Problem make_problem(std::size_t n, std::size_t m) {
  const Dims dims{1, 24, 24};
  Rng rng(derive_seed(11, "bench"));
  Problem pr{{}, {}, {}, {}, init_params(MlpArch{3, 128}, dims, 3)};
  pr.train.dims = pr.eval.dims = dims;
  pr.train.split = Split::train;
  pr.eval.split = Split::validation;
  pr.train.inputs = normals(n * 24, rng);
  pr.train.targets = normals(n * 24, rng);
  pr.eval.inputs = normals(m * 24, rng);
  pr.eval.targets = normals(m * 24, rng);
  pr.first.output_len = pr.second.output_len = 24;
  pr.first.labels = pr.train.targets;
  pr.second.labels = normals(n * 24, rng);
  return pr;
}

void BM_SeqSim(benchmark::State& state) {
  const auto pr = make_problem(static_cast<std::size_t>(state.range(0)), 32);
  for (auto _ : state) {
    auto g = estimate_seq_sim(pr.params, pr.train, pr.first, pr.second, pr.eval);
    benchmark::DoNotOptimize(g.values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SeqSim)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Seg(benchmark::State& state) {
  const auto pr = make_problem(200, 32);
  const auto segments = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto g = estimate_seg(pr.params, pr.train, pr.first, pr.second, pr.eval, segments);
    benchmark::DoNotOptimize(g.values.data());
  }
}
BENCHMARK(BM_Seg)->Arg(1)->Arg(2)->Arg(3)->Arg(6)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

}  // namespace
