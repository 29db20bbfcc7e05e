#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "igc/compressors.hpp"
#include "igc/fastfood.hpp"
#include "igc/fwht.hpp"
#include "igc/rng.hpp"

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  igc::DetRng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.next_gaussian();
  return v;
}

void BM_Fwht(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<double> v(n);
  igc::DetRng rng(1);
  for (auto& x : v) x = rng.next_gaussian();
  for (auto _ : state) {
    igc::fwht_inplace(v);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Fwht)->RangeMultiplier(4)->Range(1 << 8, 1 << 20);

void BM_FastfoodForward(benchmark::State& state) {
  const std::size_t big = static_cast<std::size_t>(state.range(0));
  const std::size_t small = big / 16;
  const igc::FastfoodMatrix m(7, big, small);
  const Eigen::VectorXd s = random_vector(static_cast<Eigen::Index>(small), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.forward(s));
  }
}
BENCHMARK(BM_FastfoodForward)->RangeMultiplier(4)->Range(1 << 10, 1 << 18);

void BM_FastfoodAdjoint(benchmark::State& state) {
  const std::size_t big = static_cast<std::size_t>(state.range(0));
  const igc::FastfoodMatrix m(7, big, big / 16);
  const Eigen::VectorXd y = random_vector(static_cast<Eigen::Index>(big), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.adjoint(y));
  }
}
BENCHMARK(BM_FastfoodAdjoint)->RangeMultiplier(4)->Range(1 << 10, 1 << 18);

void BM_TopK(benchmark::State& state) {
  const std::size_t big = 1 << 16;
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const Eigen::VectorXd g = random_vector(1 << 16, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(igc::topk_compress(g, k));
  }
  (void)big;
}
BENCHMARK(BM_TopK)->RangeMultiplier(8)->Range(8, 1 << 12);

}  // namespace

BENCHMARK_MAIN();
