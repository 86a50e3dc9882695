#include <benchmark/benchmark.h>

#include <random>

#include "recipetree/encoders.hpp"

using namespace recipetree;

namespace {

std::vector<std::vector<double>> random_inputs(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  for (auto& v : out)
    for (double& x : v) x = d(rng);
  return out;
}

void BM_TreeEncodeInfer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(1);
  ParameterStore store;
  TreeLstmCell cell(store, "tree", dim, dim, rng);
  const auto xs = random_inputs(n, dim, rng);
  EncodeContext ctx;
  for (auto _ : state) {
    Graph g;
    std::vector<Var> inputs;
    for (const auto& x : xs) inputs.push_back(g.constant(x));
    auto enc = tree_encode(g, cell, inputs, {}, ctx);
    benchmark::DoNotOptimize(g.value(enc.root.h).data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_TreeEncodeInfer)->Args({8, 32})->Args({20, 32})->Args({20, 150});

void BM_TreeEncodeTrainBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 32;
  std::mt19937_64 rng(2);
  ParameterStore store;
  TreeLstmCell cell(store, "tree", dim, dim, rng);
  const auto xs = random_inputs(n, dim, rng);
  std::mt19937_64 noise(3);
  EncodeContext ctx;
  ctx.mode = EncodeMode::kTrain;
  ctx.rng = &noise;
  for (auto _ : state) {
    Graph g;
    std::vector<Var> inputs;
    for (const auto& x : xs) inputs.push_back(g.constant(x));
    auto enc = tree_encode(g, cell, inputs, {}, ctx);
    g.backward(g.sum(enc.root.h));
  }
}
BENCHMARK(BM_TreeEncodeTrainBackward)->Arg(8)->Arg(20);

void BM_BiLstm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 32;
  std::mt19937_64 rng(4);
  ParameterStore store;
  LstmCell fw(store, "fw", dim, dim, rng), bw(store, "bw", dim, dim, rng);
  const auto xs = random_inputs(n, dim, rng);
  for (auto _ : state) {
    Graph g;
    std::vector<Var> inputs;
    for (const auto& x : xs) inputs.push_back(g.constant(x));
    benchmark::DoNotOptimize(g.value(bilstm_encode(g, fw, bw, inputs)).data());
  }
}
BENCHMARK(BM_BiLstm)->Arg(8)->Arg(20);

}  // namespace
