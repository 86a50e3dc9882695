#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "recipetree/config.hpp"
#include "recipetree/dataset.hpp"
#include "recipetree/errors.hpp"
#include "recipetree/model.hpp"
#include "recipetree/synthetic.hpp"
#include "oracles.hpp"

using namespace recipetree;

namespace {

std::string record_line(const std::string& id, const std::string& extra = "") {
  return R"({"id":")" + id +
         R"(","title":"Toast","ingredients":["2 slices bread","butter"],"instructions":["Toast the bread.","Spread butter."])" +
         extra + "}";
}

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_jsonl(in, 0, "mem");
}

template <class E>
std::string message_of(const std::string& text) {
  try {
    parse(text);
  } catch (const E& e) {
    return e.what();
  }
  return "<no throw>";
}

}  // namespace

TEST(Ingest, HundredRecordsSplitSeventyFifteenFifteen) {
  std::string text;
  for (int i = 0; i < 100; ++i) text += record_line("r" + std::to_string(i)) + "\n";
  auto ds = parse(text);
  EXPECT_EQ(ds.size(), 100u);
  EXPECT_EQ(ds.count(Split::kTrain), 70u);
  EXPECT_EQ(ds.count(Split::kVal), 15u);
  EXPECT_EQ(ds.count(Split::kTest), 15u);
  auto again = parse(text);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(ds.records[i].split, again.records[i].split);
  ASSERT_NE(ds.find("r7"), nullptr);
  EXPECT_EQ(ds.find("missing"), nullptr);
}

TEST(Ingest, ExplicitSplitIsKept) {
  auto ds = parse(record_line("a", R"(,"split":"test")") + "\n" + record_line("b") + "\n");
  EXPECT_EQ(ds.records[0].split, Split::kTest);
}

TEST(Ingest, Errors) {
  EXPECT_THROW(parse(""), IngestionError);
  EXPECT_THROW(parse("\n  \n"), IngestionError);
  const auto dup = message_of<ValidationError>(record_line("x") + "\n" + record_line("x") + "\n");
  EXPECT_NE(dup.find("mem:2"), std::string::npos) << dup;
  EXPECT_NE(dup.find("duplicate id"), std::string::npos);
  const auto bad = message_of<IngestionError>(record_line("x") + "\n{not json\n");
  EXPECT_NE(bad.find("mem:2"), std::string::npos) << bad;
  const auto missing = message_of<ValidationError>(R"({"id":"y","title":"t","instructions":["a"]})");
  EXPECT_NE(missing.find("ingredients"), std::string::npos) << missing;
  const auto weights = message_of<ValidationError>(record_line("z", R"(,"ingredient_weights":[100, 200])"));
  EXPECT_NE(weights.find("ingredient_weights"), std::string::npos) << weights;
  EXPECT_THROW(ingest("/nonexistent/recipes.jsonl"), IoError);
}

TEST(Ingest, ValidateRecordNamesField) {
  RecipeRecord r;
  r.id = "q";
  r.title = "t";
  r.ingredients = {"salt"};
  r.instructions = {};
  try {
    validate_record(r);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("instructions"), std::string::npos);
  }
}

TEST(Ingest, JsonlRoundTrip) {
  SyntheticSpec spec;
  spec.recipe_count = 12;
  spec.feature_dim = 4;
  auto corpus = generate_synthetic(spec);
  auto path = std::filesystem::temp_directory_path() / "rt_roundtrip.jsonl";
  write_jsonl(path, corpus.records);
  auto ds = ingest(path);
  ASSERT_EQ(ds.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    ASSERT_TRUE(ds.records[i].split.has_value());
    auto r = ds.records[i];
    r.split.reset();
    EXPECT_EQ(to_json_line(r), to_json_line(corpus.records[i]));
  }
}

TEST(FeatureStore, SaveLoadRoundTrip) {
  FeatureStore fs;
  fs.add("a", {1.0, -2.5, 3.25});
  fs.add("b", {0.1, 0.2, 0.3});
  EXPECT_THROW(fs.add("c", {1.0}), DimensionError);
  EXPECT_THROW(fs.add("a", {1.0, 2.0, 3.0}), ValidationError);
  auto path = std::filesystem::temp_directory_path() / "rt_features.bin";
  fs.save(path);
  auto back = FeatureStore::load(path);
  EXPECT_EQ(back.ids(), fs.ids());
  EXPECT_EQ(back.dim(), 3u);
  EXPECT_EQ(*back.find("a"), *fs.find("a"));
  EXPECT_EQ(*back.find("b"), *fs.find("b"));
  EXPECT_THROW(FeatureStore::load("/nonexistent/f.bin"), IoError);
}

TEST(Synthetic, DeterministicAndWeightsSumTo1000) {
  SyntheticSpec spec;
  spec.recipe_count = 40;
  spec.feature_dim = 8;
  spec.seed = 5;
  auto a = generate_synthetic(spec), b = generate_synthetic(spec);
  ASSERT_EQ(a.records.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(to_json_line(a.records[i]), to_json_line(b.records[i]));
    const auto& w = *a.records[i].ingredient_weights;
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1000.0, 1e-9);
    const auto heaviest = std::max_element(w.begin(), w.end()) - w.begin();
    EXPECT_EQ(a.records[i].ingredients[static_cast<std::size_t>(heaviest)], a.mains[i]);
    EXPECT_NO_THROW(validate_record(a.records[i]));
  }
  EXPECT_EQ(a.features.size(), 80u);
}

TEST(Synthetic, FullSignalNoNoiseMakesSameMainImagesIdentical) {
  SyntheticSpec spec;
  spec.recipe_count = 30;
  spec.feature_dim = 10;
  spec.signal_strength = 1.0;
  spec.noise = 0.0;
  spec.images_per_recipe = 1;
  auto c = generate_synthetic(spec);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 30; ++j) {
      const auto& fi = *c.features.find(c.records[i].image_ids[0]);
      const auto& fj = *c.features.find(c.records[j].image_ids[0]);
      const double cos = oracle::cosine(fi, fj);
      if (c.mains[i] == c.mains[j]) {
        EXPECT_NEAR(cos, 1.0, 1e-12);
      } else {
        EXPECT_LT(cos, 0.999);
      }
    }
  }
}

TEST(Synthetic, SpecValidation) {
  SyntheticSpec spec;
  spec.signal_strength = 1.5;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.recipe_count = 0;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.main_pool_size = 0;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

TEST(Config, ParsesKeysAndComments) {
  auto cfg = parse_config("# comment\nencoders = S+L+T\nword_dim = 7\nmargin = 0.4  # inline\nseed = 3\n"
                          "gumbel_hard = false\nimage_dim = 9\n");
  EXPECT_EQ(cfg.model.word_dim, 7u);
  EXPECT_DOUBLE_EQ(cfg.train.margin, 0.4);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_FALSE(cfg.model.gumbel_hard);
  EXPECT_EQ(cfg.synth.feature_dim, 9u);
  EXPECT_EQ(cfg.model.kinds.ingredient, SectionKind::kSet);
  EXPECT_EQ(cfg.model.kinds.instruction, SectionKind::kTree);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("word_dim\n"), ConfigError);
  EXPECT_THROW(parse_config("word_dim = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("word_dim =\n"), ConfigError);
  EXPECT_THROW(parse_config("gumbel_hard = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("margin = 3\n"), ConfigError);
  try {
    parse_config("\n\nbogus = 1\n", "my.cfg");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("my.cfg:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config("/nonexistent/x.cfg"), IoError);
}

TEST(Checkpoint, RoundTripAndVocabMismatch) {
  ModelConfig cfg;
  cfg.kinds = EncoderKinds::parse("T+T+L");
  cfg.word_dim = 3;
  cfg.section_dim = 4;
  cfg.latent_dim = 5;
  cfg.image_dim = 6;
  std::vector<std::vector<std::string>> seqs = {{"salt", "pepper", "bake", "."}};
  auto vocab = Vocabulary::build(seqs, 1);
  Model model(cfg, vocab, 11);
  auto path = std::filesystem::temp_directory_path() / "rt_model.ckpt";
  model.save(path);
  auto back = Model::load(path, vocab);
  EXPECT_EQ(back.seed(), 11u);
  EXPECT_EQ(back.parameters().names(), model.parameters().names());
  for (const auto& n : model.parameters().names()) {
    auto a = model.parameters().at(n).values(), b = back.parameters().at(n).values();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end())) << n;
  }
  TokenRecipe r;
  r.id = "x";
  r.title = {"salt"};
  r.ingredients = {"salt", "pepper"};
  r.instructions = {{"bake", "."}};
  EXPECT_EQ(model.embed_recipe(r), back.embed_recipe(r));

  std::vector<std::vector<std::string>> other_seqs = {{"sugar"}};
  EXPECT_THROW(Model::load(path, Vocabulary::build(other_seqs, 1)), ValidationError);
  std::ofstream(path, std::ios::binary | std::ios::app) << "x";
  EXPECT_THROW(Model::load(path, vocab), ValidationError);
}
