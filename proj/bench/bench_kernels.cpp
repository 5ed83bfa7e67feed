// Serial reference vs OpenMP kernels. Set OMP_NUM_THREADS to compare scaling.

#include <benchmark/benchmark.h>

#include <random>

#include "clustop/kernels.hpp"

using namespace clustop;

namespace {

EmbeddingMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  EmbeddingMatrix m(n, d);
  for (double& v : m.values()) v = g(rng);
  return m;
}

template <auto Fn>
void BM_Pairwise(benchmark::State& state) {
  const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, Metric::Euclidean));
  state.SetComplexityN(state.range(0));
}

template <auto Fn>
void BM_Knn(benchmark::State& state) {
  const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, 15, Metric::Euclidean));
  state.SetComplexityN(state.range(0));
}

template <auto Fn>
void BM_AssignNearest(benchmark::State& state) {
  const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), 32, 3);
  const auto c = random_matrix(16, 32, 4);
  std::vector<double> sq;
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, c, sq));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Pairwise<kernels::serial::pairwise_distances>)->Name("pairwise/serial")->Arg(500)->Arg(2000);
BENCHMARK(BM_Pairwise<kernels::omp::pairwise_distances>)->Name("pairwise/omp")->Arg(500)->Arg(2000);
BENCHMARK(BM_Knn<kernels::serial::knn>)->Name("knn/serial")->Arg(500)->Arg(2000);
BENCHMARK(BM_Knn<kernels::omp::knn>)->Name("knn/omp")->Arg(500)->Arg(2000);
BENCHMARK(BM_AssignNearest<kernels::serial::assign_nearest>)->Name("assign_nearest/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_AssignNearest<kernels::omp::assign_nearest>)->Name("assign_nearest/omp")->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
