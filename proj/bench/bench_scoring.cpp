// Serial vs OpenMP candidate scoring, the hot loop of value calibration.
#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "sqlsketch/kernels.hpp"

using namespace sqlsketch;

namespace {

std::vector<std::u32string> candidates(std::size_t n, std::size_t max_len) {
  std::mt19937 rng(42);
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> ch('a', 'z');
  std::vector<std::u32string> out(n);
  for (auto& s : out) {
    s.resize(len(rng));
    for (auto& c : s) c = static_cast<char32_t>(ch(rng));
  }
  return out;
}

const std::u32string kQuery = U"timmothy ward";

void BM_FuzzySerial(benchmark::State& state) {
  const auto c = candidates(static_cast<std::size_t>(state.range(0)), 24);
  std::vector<double> out(c.size());
  for (auto _ : state) {
    kernels::fuzzy_scores_serial(kQuery, c, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FuzzyParallel(benchmark::State& state) {
  const auto c = candidates(static_cast<std::size_t>(state.range(0)), 24);
  std::vector<double> out(c.size());
  for (auto _ : state) {
    kernels::fuzzy_scores(kQuery, c, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<double> matrix(std::size_t rows, std::size_t dim) {
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  std::vector<double> m(rows * dim);
  for (auto& x : m) x = nd(rng);
  return m;
}

void BM_CosineSerial(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0)), dim = 384;
  const auto m = matrix(rows, dim);
  const auto q = matrix(1, dim);
  std::vector<double> out(rows);
  for (auto _ : state) {
    kernels::cosine_scores_serial(q, m, dim, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CosineParallel(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0)), dim = 384;
  const auto m = matrix(rows, dim);
  const auto q = matrix(1, dim);
  std::vector<double> out(rows);
  for (auto _ : state) {
    kernels::cosine_scores(q, m, dim, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_FuzzySerial)->RangeMultiplier(10)->Range(1000, 100000)->UseRealTime();
BENCHMARK(BM_FuzzyParallel)->RangeMultiplier(10)->Range(1000, 100000)->UseRealTime();
BENCHMARK(BM_CosineSerial)->RangeMultiplier(10)->Range(1000, 100000)->UseRealTime();
BENCHMARK(BM_CosineParallel)->RangeMultiplier(10)->Range(1000, 100000)->UseRealTime();

BENCHMARK_MAIN();
