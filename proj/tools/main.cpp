// recipetree: command-line front end for data preparation, training,
// evaluation and tree analyses.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "recipetree/config.hpp"
#include "recipetree/dataset.hpp"
#include "recipetree/embeddings.hpp"
#include "recipetree/errors.hpp"
#include "recipetree/model.hpp"
#include "recipetree/retrieval.hpp"
#include "recipetree/synthetic.hpp"
#include "recipetree/text_prep.hpp"
#include "recipetree/training.hpp"
#include "recipetree/tree_analysis.hpp"

namespace fs = std::filesystem;
using namespace recipetree;
using Json = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string checkpoint;
  std::string workdir = ".";
};

struct Paths {
  fs::path recipes, features, vocab, canonical, proposals, words, report;
};

Paths default_paths(const Globals& g) {
  const fs::path w = g.workdir;
  return {w / "recipes.jsonl", w / "features.bin", w / "vocab.txt", w / "canonical.tsv",
          w / "proposals.txt", w / "words.bin",    w / "report.json"};
}

AppConfig load_app_config(const Globals& g) {
  AppConfig cfg = g.config.empty() ? AppConfig{} : load_config(g.config);
  if (g.seed) cfg.set_seed(*g.seed);
  return cfg;
}

fs::path require_checkpoint(const Globals& g, const std::string& command) {
  if (g.checkpoint.empty()) throw UsageError(command + " requires --checkpoint <file>");
  return g.checkpoint;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

/// Recipes tokenised with the prepared canonical map, plus the vocabulary.
struct Prepared {
  Dataset dataset;
  CanonicalMap canon;
  Vocabulary vocab;
  std::vector<TokenRecipe> recipes;
};

Prepared load_prepared(const Paths& p, const AppConfig& cfg) {
  Prepared out;
  out.dataset = ingest(p.recipes, cfg.seed);
  if (fs::exists(p.canonical)) out.canon = CanonicalMap::load(p.canonical);
  out.vocab = Vocabulary::load(p.vocab);
  out.recipes = tokenize_dataset(out.dataset, out.canon);
  return out;
}

const TokenRecipe& find_recipe(const std::vector<TokenRecipe>& recipes, const std::string& id) {
  for (const auto& r : recipes) {
    if (r.id == id) return r;
  }
  throw NotFoundError("no recipe with id '" + id + "'");
}

Json recipe_json(const TokenRecipe& r) {
  Json j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["ingredients"] = r.ingredients;
  j["instructions"] = r.instructions;
  return j;
}

Json trees_json(const RecipeTrees& t) {
  Json j = Json::object();
  if (t.ingredients) j["ingredients"] = t.ingredients->to_sexpr();
  if (!t.sentences.empty()) {
    j["sentences"] = Json::array();
    for (const auto& s : t.sentences) j["sentences"].push_back(s.to_sexpr());
  }
  if (t.instructions) j["instructions"] = t.instructions->to_sexpr();
  return j;
}

Split parse_split_option(const std::string& s) {
  try {
    return parse_split(s);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

std::string default_lexicon() {
  return fs::exists(RECIPETREE_INSTALLED_LEXICON) ? RECIPETREE_INSTALLED_LEXICON : RECIPETREE_SOURCE_LEXICON;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_synth(const Globals& g, const Paths& p) {
  const AppConfig cfg = load_app_config(g);
  const SyntheticCorpus corpus = generate_synthetic(cfg.synth);
  fs::create_directories(g.workdir);
  write_jsonl(p.recipes, corpus.records);
  corpus.features.save(p.features);
  std::cout << "wrote " << corpus.records.size() << " recipes to " << p.recipes.string() << " and "
            << corpus.features.size() << " image features to " << p.features.string() << "\n";
}

void cmd_prep(const Globals& g, const Paths& p, const std::string& review, const std::string& mapping,
              const std::string& vectors) {
  const AppConfig cfg = load_app_config(g);
  Dataset ds = ingest(p.recipes, cfg.seed);

  std::set<std::string> raw;
  for (const auto& r : ds.records) {
    for (const auto& line : r.ingredients) raw.insert(ingredient_token(line));
  }
  const std::vector<std::string> ingredients(raw.begin(), raw.end());

  // Proximity proposals need word vectors from an earlier pretrain pass.
  TokenSimilarity similarity = [](const std::string&, const std::string&) { return std::optional<double>{}; };
  std::optional<Vocabulary> prior_vocab;
  std::optional<WordTable> prior_table;
  if (!vectors.empty()) {
    prior_vocab = Vocabulary::load(p.vocab);
    prior_table = WordTable::load(vectors, prior_vocab->hash());
    similarity = [&](const std::string& a, const std::string& b) -> std::optional<double> {
      const auto ia = prior_vocab->index(a), ib = prior_vocab->index(b);
      if (ia == Vocabulary::kUnk || ib == Vocabulary::kUnk) return std::nullopt;
      auto va = prior_table->row(ia), vb = prior_table->row(ib);
      double d = 0, na = 0, nb = 0;
      for (std::size_t i = 0; i < va.size(); ++i) {
        d += va[i] * vb[i];
        na += va[i] * va[i];
        nb += vb[i] * vb[i];
      }
      if (na == 0.0 || nb == 0.0) return std::nullopt;
      return d / std::sqrt(na * nb);
    };
  }
  MergeProposalOptions options;
  options.proximity_threshold = cfg.proximity_threshold;
  if (!mapping.empty()) options.mapping_file = mapping;
  std::vector<MergeRule> rules = propose_merges(ingredients, similarity, options);
  write_text(p.proposals, format_proposals(rules));

  CanonicalMap canon;
  if (!review.empty()) canon = apply_review(rules, load_review_ledger(review));
  register_ingredient_phrases(canon, ds.records);
  canon.save(p.canonical);

  const auto recipes = tokenize_dataset(ds, canon);
  std::vector<std::vector<std::string>> sequences;
  for (const auto& r : recipes) {
    if (r.split != Split::kTrain) continue;
    for (auto& s : token_sequences(r)) sequences.push_back(std::move(s));
  }
  const Vocabulary vocab = Vocabulary::build(sequences, cfg.min_count);
  vocab.save(p.vocab);
  std::cout << "recipes: " << ds.size() << " (train " << ds.count(Split::kTrain) << ", val " << ds.count(Split::kVal)
            << ", test " << ds.count(Split::kTest) << ")\n"
            << "merge proposals: " << rules.size() << " -> " << p.proposals.string() << "\n"
            << "vocabulary: " << vocab.size() << " tokens -> " << p.vocab.string() << "\n";
}

void cmd_pretrain(const Globals& g, const Paths& p) {
  const AppConfig cfg = load_app_config(g);
  const Prepared prep = load_prepared(p, cfg);
  std::vector<std::vector<std::size_t>> sentences;
  for (const auto& r : prep.recipes) {
    if (r.split != Split::kTrain) continue;
    for (const auto& s : token_sequences(r)) sentences.push_back(prep.vocab.encode(s));
  }
  WordTable table = WordTable::random(prep.vocab.size(), cfg.model.word_dim, cfg.seed);
  const SkipGramReport report = pretrain_skipgram(sentences, table, cfg.skipgram);
  table.save(p.words, prep.vocab.hash());
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    std::cout << "skip-gram epoch " << e + 1 << " loss " << report.epoch_loss[e] << "\n";
  }
  std::cout << "word vectors -> " << p.words.string() << "\n";
}

void cmd_train(const Globals& g, const Paths& p) {
  AppConfig cfg = load_app_config(g);
  const fs::path checkpoint = g.checkpoint.empty() ? fs::path(g.workdir) / "model.ckpt" : fs::path(g.checkpoint);
  const Prepared prep = load_prepared(p, cfg);
  const FeatureStore features = FeatureStore::load(p.features);
  Model model(cfg.model, prep.vocab, cfg.seed);
  if (fs::exists(p.words)) model.set_word_vectors(WordTable::load(p.words, prep.vocab.hash()));
  const auto train_recipes = select_split(prep.recipes, Split::kTrain);
  const auto items = make_training_items(train_recipes, features, cfg.train.max_images_per_recipe);
  if (cfg.train.checkpoint_every > 0) cfg.train.checkpoint_dir = fs::path(g.workdir) / "checkpoints";
  train(model, items, cfg.train,
        [](std::size_t epoch, double loss) { std::cout << "epoch " << epoch << " loss " << loss << "\n"; });
  model.save(checkpoint);
  std::cout << "checkpoint -> " << checkpoint.string() << "\n";
}

void cmd_eval(const Globals& g, const Paths& p, const std::string& split, std::optional<std::size_t> pool,
              std::optional<std::size_t> repeats, const std::string& out) {
  const fs::path checkpoint = require_checkpoint(g, "eval");
  const AppConfig cfg = load_app_config(g);
  const Prepared prep = load_prepared(p, cfg);
  const FeatureStore features = FeatureStore::load(p.features);
  const Model model = Model::load(checkpoint, prep.vocab);
  const auto recipes = select_split(prep.recipes, parse_split_option(split));
  const EvaluationResult result =
      evaluate(model, recipes, features, pool.value_or(cfg.pool_size), repeats.value_or(cfg.repeats), cfg.seed);
  const fs::path report = out.empty() ? p.report : fs::path(out);
  write_text(report, result.to_json());
  std::cout << result.to_table() << "report -> " << report.string() << "\n";
}

void cmd_analyze_trees(const Globals& g, const Paths& p, const std::string& id) {
  const fs::path checkpoint = require_checkpoint(g, "analyze trees");
  const AppConfig cfg = load_app_config(g);
  const Prepared prep = load_prepared(p, cfg);
  const Model model = Model::load(checkpoint, prep.vocab);
  RecipeTrees trees;
  model.embed_recipe(find_recipe(prep.recipes, id), &trees);
  Json j;
  j["schema"] = 1;
  j["recipe"] = id;
  j["trees"] = trees_json(trees);
  std::cout << j.dump(2) << "\n";
}

void cmd_analyze_depths(const Globals& g, const Paths& p, const std::string& split) {
  const fs::path checkpoint = require_checkpoint(g, "analyze depths");
  const AppConfig cfg = load_app_config(g);
  const Prepared prep = load_prepared(p, cfg);
  const Model model = Model::load(checkpoint, prep.vocab);
  std::map<std::string, std::pair<double, std::size_t>> totals[2];
  Json records = Json::array();
  for (const auto& r : select_split(prep.recipes, parse_split_option(split))) {
    RecipeTrees trees;
    model.embed_recipe(r, &trees);
    std::vector<LeafDepthRecord> recs;
    if (trees.ingredients) recs = leaf_depths(*trees.ingredients, r.id, TreeSection::kIngredients);
    for (const auto& s : trees.sentences) {
      auto more = leaf_depths(s, r.id, TreeSection::kSentence);
      recs.insert(recs.end(), more.begin(), more.end());
    }
    for (const auto& rec : recs) {
      records.push_back(
          {{"recipe", rec.recipe_id}, {"section", to_string(rec.section)}, {"token", rec.token}, {"depth", rec.depth}});
      auto& t = totals[rec.section == TreeSection::kSentence][rec.token];
      t.first += static_cast<double>(rec.depth);
      ++t.second;
    }
  }
  Json j;
  j["schema"] = 1;
  j["split"] = split;
  for (int s = 0; s < 2; ++s) {
    Json avg = Json::object();
    for (const auto& [token, t] : totals[s]) avg[token] = {{"mean_depth", t.first / static_cast<double>(t.second)}, {"count", t.second}};
    j[s ? "sentence_average_depth" : "ingredient_average_depth"] = avg;
  }
  j["records"] = records;
  std::cout << j.dump(2) << "\n";
}

void cmd_analyze_main(const Globals& g, const Paths& p, const std::string& id, const std::string& split) {
  const fs::path checkpoint = require_checkpoint(g, "analyze main-ingredient");
  const AppConfig cfg = load_app_config(g);
  const Prepared prep = load_prepared(p, cfg);
  const Model model = Model::load(checkpoint, prep.vocab);
  if (model.config().kinds.ingredient != SectionKind::kTree) {
    throw ConfigError("main-ingredient analysis needs a Tree ingredient encoder");
  }
  if (!id.empty()) {
    RecipeTrees trees;
    model.embed_recipe(find_recipe(prep.recipes, id), &trees);
    std::cout << trees.ingredients->to_sexpr() << "\n" << "main ingredient: " << main_ingredient(*trees.ingredients) << "\n";
    return;
  }
  const auto eval = main_ingredient_rank_eval(model, select_split(prep.recipes, parse_split_option(split)));
  Json j;
  j["schema"] = 1;
  j["split"] = split;
  j["recipes"] = eval.recipes;
  j["medR"] = eval.medR;
  j["recall"] = {{"1", eval.r1}, {"2", eval.r2}, {"3", eval.r3}};
  std::cout << j.dump(2) << "\n";
}

void cmd_analyze_actions(const Globals& g, const Paths& p, const std::string& lexicon, bool lemmatize,
                         const std::string& split) {
  const fs::path checkpoint = require_checkpoint(g, "analyze actions");
  const AppConfig cfg = load_app_config(g);
  const Prepared prep = load_prepared(p, cfg);
  const Model model = Model::load(checkpoint, prep.vocab);
  const VerbLexicon lex = VerbLexicon::load(lexicon);
  const auto stats = action_word_stats(model, select_split(prep.recipes, parse_split_option(split)), lex, lemmatize);
  Json j;
  j["schema"] = 1;
  j["split"] = split;
  j["sentence_trees"] = stats.sentence_trees;
  j["verb_count"] = stats.verb_count;
  j["percentage"] = stats.percentage;
  std::cout << j.dump(2) << "\n";
}

void cmd_prune(const Globals& g, const Paths& p, const std::string& id, const std::string& mode, std::size_t k) {
  const fs::path checkpoint = require_checkpoint(g, "prune");
  const AppConfig cfg = load_app_config(g);
  const Prepared prep = load_prepared(p, cfg);
  const Model model = Model::load(checkpoint, prep.vocab);
  if (model.config().kinds.ingredient != SectionKind::kTree) throw ConfigError("pruning needs a Tree ingredient encoder");
  const TokenRecipe& recipe = find_recipe(prep.recipes, id);
  RecipeTrees trees;
  const auto before = model.embed_recipe(recipe, &trees);
  const TokenRecipe pruned = prune(recipe, *trees.ingredients, parse_prune_mode(mode), k);
  const auto after = model.embed_recipe(pruned);
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    d += before[i] * after[i];
    na += before[i] * before[i];
    nb += after[i] * after[i];
  }
  Json j;
  j["schema"] = 1;
  j["mode"] = mode;
  j["k"] = k;
  j["tree"] = trees.ingredients->to_sexpr();
  j["pruned"] = recipe_json(pruned);
  j["cosine_to_original"] = d / std::sqrt(na * nb);
  std::cout << j.dump(2) << "\n";
}

void cmd_substitute(const Globals& g, const Paths& p, const std::string& id, const std::string& from,
                    const std::string& to, bool retain, const std::string& target, std::size_t top_k,
                    const std::string& split) {
  const fs::path checkpoint = require_checkpoint(g, "substitute");
  const AppConfig cfg = load_app_config(g);
  const Prepared prep = load_prepared(p, cfg);
  const FeatureStore features = FeatureStore::load(p.features);
  const Model model = Model::load(checkpoint, prep.vocab);
  const TokenRecipe& recipe = find_recipe(prep.recipes, id);
  RecipeTrees trees;
  model.embed_recipe(recipe, &trees);
  const Substitution sub = substitute(recipe, from, to, retain, &trees);
  const auto latent = embed_substitution(model, sub);

  const bool to_images = target == "image";
  if (!to_images && target != "recipe") throw UsageError("--target must be 'image' or 'recipe'");
  std::vector<const TokenRecipe*> corpus;
  RetrievalCorpus rc;
  for (const auto& r : select_split(prep.recipes, parse_split_option(split))) {
    const std::vector<double>* f = nullptr;
    for (const auto& img : r.image_ids) {
      if ((f = features.find(img))) break;
    }
    if (!f) continue;
    rc.recipes.push_back(model.embed_recipe(r));
    rc.images.push_back(model.embed_image(*f));
    rc.ingredients.emplace_back(r.ingredients.begin(), r.ingredients.end());
    corpus.push_back(&find_recipe(prep.recipes, r.id));
  }
  std::size_t source = corpus.size();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i]->id == id) source = i;
  }
  SubstitutionOptions options;
  options.target = to_images ? SubstitutionTarget::kImage : SubstitutionTarget::kRecipe;
  options.top_k = top_k;
  const SubstitutionQuery query{latent, source};
  const double sr = substitution_success_rate(std::span(&query, 1), rc, to, options);

  // Report the retrieved items themselves as well.
  const auto& cands = to_images ? rc.images : rc.recipes;
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t j = 0; j < cands.size(); ++j) {
    if (!to_images && j == source) continue;
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < latent.size(); ++i) {
      d += latent[i] * cands[j][i];
      na += latent[i] * latent[i];
      nb += cands[j][i] * cands[j][i];
    }
    scored.emplace_back(d / std::sqrt(na * nb), j);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  Json hits = Json::array();
  for (std::size_t i = 0; i < std::min(top_k, scored.size()); ++i) {
    hits.push_back({{"id", corpus[scored[i].second]->id}, {"cosine", scored[i].first},
                    {"contains_target", rc.ingredients[scored[i].second].count(to) > 0}});
  }
  Json j;
  j["schema"] = 1;
  j["recipe"] = recipe_json(sub.recipe);
  j["retain_structure"] = retain;
  j["target"] = target;
  j["retrieved"] = hits;
  j["success"] = sr > 0.0;
  std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recipetree: latent-tree recipe/image embeddings"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed overriding the configuration");
  app.add_option("--checkpoint", g.checkpoint, "model checkpoint to read (or write, for train)");
  app.add_option("--workdir", g.workdir, "directory holding recipes.jsonl, features.bin, vocab.txt, ...");

  std::string review, mapping, vectors;
  auto* synth = app.add_subcommand("synth", "generate a planted-signal synthetic corpus");
  auto* prep = app.add_subcommand("prep", "build merge proposals, canonical map and vocabulary");
  prep->add_option("--review", review, "reviewed merge ledger (accept|reject src -> canonical)");
  prep->add_option("--mapping", mapping, "external two-column ingredient mapping file");
  prep->add_option("--vectors", vectors, "word vectors from an earlier pretrain, for proximity proposals");
  auto* pretrain = app.add_subcommand("pretrain", "skip-gram word vectors");
  auto* trainc = app.add_subcommand("train", "triplet-loss training");

  std::string split = "test", out;
  std::optional<std::size_t> pool, repeats;
  auto* eval = app.add_subcommand("eval", "retrieval medR / R@K report");
  eval->add_option("--split", split, "train | val | test");
  eval->add_option("--pool", pool, "pool size (default from config)");
  eval->add_option("--repeats", repeats, "repeat count (default from config)");
  eval->add_option("--out", out, "report path (default <workdir>/report.json)");

  std::string recipe_id, lexicon = default_lexicon();
  bool lemmatize = false;
  auto* analyze = app.add_subcommand("analyze", "tree analyses");
  analyze->require_subcommand(1);
  auto* trees = analyze->add_subcommand("trees", "print inferred trees of one recipe");
  trees->add_option("--recipe", recipe_id, "recipe id")->required();
  auto* depths = analyze->add_subcommand("depths", "leaf depth statistics");
  depths->add_option("--split", split, "train | val | test");
  auto* main_ing = analyze->add_subcommand("main-ingredient", "shallowest-leaf main ingredient");
  main_ing->add_option("--recipe", recipe_id, "single recipe id (otherwise rank evaluation over --split)");
  main_ing->add_option("--split", split, "train | val | test");
  auto* actions = analyze->add_subcommand("actions", "verbs at the shallowest sentence leaf");
  actions->add_option("--lexicon", lexicon, "verb lexicon file");
  actions->add_flag("--lemmatize", lemmatize, "strip inflection before lexicon lookup");
  actions->add_option("--split", split, "train | val | test");

  std::string mode = "remove_last_K";
  std::size_t k = 1;
  auto* prune_cmd = app.add_subcommand("prune", "drop the least important ingredients of one recipe");
  prune_cmd->add_option("--recipe", recipe_id, "recipe id")->required();
  prune_cmd->add_option("--mode", mode, "remove_last_K | keep_first_K | keep_depth_K");
  prune_cmd->add_option("-k,--k", k, "K");

  std::string from, to, target = "image";
  bool retain = false;
  std::size_t top_k = 1;
  auto* subst = app.add_subcommand("substitute", "swap an ingredient and retrieve");
  subst->add_option("--recipe", recipe_id, "recipe id")->required();
  subst->add_option("--from", from, "ingredient token to replace")->required();
  subst->add_option("--to", to, "replacement token")->required();
  subst->add_flag("--retain-structure", retain, "replay the original trees");
  subst->add_option("--target", target, "image | recipe");
  subst->add_option("--top-k", top_k, "success if any of the top k retrieved items contains the new ingredient");
  subst->add_option("--split", split, "retrieval corpus split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const Paths p = default_paths(g);
    if (*synth) cmd_synth(g, p);
    if (*prep) cmd_prep(g, p, review, mapping, vectors);
    if (*pretrain) cmd_pretrain(g, p);
    if (*trainc) cmd_train(g, p);
    if (*eval) cmd_eval(g, p, split, pool, repeats, out);
    if (*trees) cmd_analyze_trees(g, p, recipe_id);
    if (*depths) cmd_analyze_depths(g, p, split);
    if (*main_ing) cmd_analyze_main(g, p, recipe_id, split);
    if (*actions) cmd_analyze_actions(g, p, lexicon, lemmatize, split);
    if (*prune_cmd) cmd_prune(g, p, recipe_id, mode, k);
    if (*subst) cmd_substitute(g, p, recipe_id, from, to, retain, target, top_k, split);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
