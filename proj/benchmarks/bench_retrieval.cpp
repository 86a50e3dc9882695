#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "recipetree/retrieval.hpp"

using namespace recipetree;

namespace {

std::vector<Latent> latents(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<Latent> out(n, Latent(dim));
  for (auto& v : out)
    for (double& x : v) x = d(rng);
  return out;
}

void BM_RankPool(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto q = latents(n, 64, rng), c = latents(n, 64, rng);
  std::vector<std::size_t> truth(n);
  std::iota(truth.begin(), truth.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(rank_pool(q, c, truth).data());
}
BENCHMARK(BM_RankPool)->Arg(100)->Arg(1000);

void BM_EvaluateLatents(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto r = latents(2000, 64, rng), i = latents(2000, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_latents(r, i, 1000, 10, 0).image_to_recipe.medR);
}
BENCHMARK(BM_EvaluateLatents)->Unit(benchmark::kMillisecond);

}  // namespace
