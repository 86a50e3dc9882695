#include <benchmark/benchmark.h>

#include "recipetree/dataset.hpp"
#include "recipetree/model.hpp"
#include "recipetree/synthetic.hpp"
#include "recipetree/training.hpp"

using namespace recipetree;

namespace {

void BM_TrainEpoch(benchmark::State& state) {
  SyntheticSpec spec;
  spec.recipe_count = 32;
  spec.feature_dim = 32;
  auto corpus = generate_synthetic(spec);
  CanonicalMap canon;
  register_ingredient_phrases(canon, corpus.records);
  const auto recipes = tokenize_dataset(Dataset{corpus.records}, canon);
  std::vector<std::vector<std::string>> seqs;
  for (const auto& r : recipes)
    for (auto& s : token_sequences(r)) seqs.push_back(std::move(s));
  ModelConfig mc;
  mc.kinds = EncoderKinds::parse(state.range(0) ? "T+T+L" : "T+L+L");
  mc.word_dim = 16;
  mc.section_dim = 32;
  mc.latent_dim = 32;
  mc.image_dim = 32;
  Model model(mc, Vocabulary::build(seqs, 1), 1);
  const auto items = make_training_items(recipes, corpus.features, 5);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 16;
  for (auto _ : state) train(model, items, tc);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(items.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
