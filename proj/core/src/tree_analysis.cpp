#include "recipetree/tree_analysis.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>

#include "recipetree/errors.hpp"
#include "recipetree/retrieval.hpp"

namespace recipetree {

std::string_view to_string(TreeSection section) {
  return section == TreeSection::kIngredients ? "ingredients" : "sentence";
}

std::vector<LeafDepthRecord> leaf_depths(const BinaryCompositionTree& tree, const std::string& recipe_id,
                                         TreeSection section) {
  const auto depths = tree.leaf_depths();
  std::vector<LeafDepthRecord> out;
  out.reserve(depths.size());
  for (std::size_t i = 0; i < depths.size(); ++i) out.push_back({tree.leaves()[i], depths[i], recipe_id, section});
  return out;
}

std::vector<std::size_t> importance_order(const BinaryCompositionTree& tree) {
  const auto depth = tree.leaf_depths();
  const auto parent = tree.leaf_parent_orders();
  std::vector<std::size_t> order(tree.leaf_count());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (depth[a] != depth[b]) return depth[a] < depth[b];
    if (parent[a] != parent[b]) return parent[a] > parent[b];
    return a < b;
  });
  return order;
}

std::size_t main_leaf(const BinaryCompositionTree& tree) {
  if (tree.leaf_count() == 0) throw ArgumentError("tree has no leaves");
  return importance_order(tree).front();
}

const std::string& main_ingredient(const BinaryCompositionTree& tree) { return tree.leaves()[main_leaf(tree)]; }

std::size_t importance_rank(const BinaryCompositionTree& tree, std::size_t gold) {
  if (gold >= tree.leaf_count()) throw ArgumentError("gold leaf index out of range");
  const auto order = importance_order(tree);
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), gold) - order.begin()) + 1;
}

MainIngredientEval main_ingredient_rank_eval(std::span<const BinaryCompositionTree> trees,
                                             std::span<const std::size_t> gold) {
  if (trees.size() != gold.size()) throw ArgumentError("one gold index per tree is required");
  if (trees.empty()) throw ArgumentError("main-ingredient evaluation needs at least one recipe");
  MainIngredientEval eval;
  eval.recipes = trees.size();
  for (std::size_t i = 0; i < trees.size(); ++i) eval.ranks.push_back(importance_rank(trees[i], gold[i]));
  eval.medR = median_rank(eval.ranks);
  eval.r1 = recall_at(eval.ranks, 1);
  eval.r2 = recall_at(eval.ranks, 2);
  eval.r3 = recall_at(eval.ranks, 3);
  return eval;
}

MainIngredientEval main_ingredient_rank_eval(const Model& model, std::span<const TokenRecipe> recipes) {
  if (model.config().kinds.ingredient != SectionKind::kTree) {
    throw ConfigError("main-ingredient evaluation needs a Tree ingredient encoder");
  }
  std::vector<BinaryCompositionTree> trees;
  std::vector<std::size_t> gold;
  for (const auto& r : recipes) {
    if (!r.ingredient_weights || r.ingredient_weights->size() != r.ingredients.size()) {
      throw ValidationError("recipe " + r.id + ": ingredient_weights missing or misaligned");
    }
    const auto& w = *r.ingredient_weights;
    gold.push_back(static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin()));
    RecipeTrees t;
    model.embed_recipe(r, &t);
    trees.push_back(std::move(*t.ingredients));
  }
  return main_ingredient_rank_eval(trees, gold);
}

std::string_view to_string(PruneMode mode) {
  switch (mode) {
    case PruneMode::kRemoveLastK:
      return "remove_last_K";
    case PruneMode::kKeepFirstK:
      return "keep_first_K";
    case PruneMode::kKeepDepthK:
      return "keep_depth_K";
  }
  return "remove_last_K";
}

PruneMode parse_prune_mode(std::string_view text) {
  if (text == "remove_last_K" || text == "remove-last") return PruneMode::kRemoveLastK;
  if (text == "keep_first_K" || text == "keep-first") return PruneMode::kKeepFirstK;
  if (text == "keep_depth_K" || text == "keep-depth") return PruneMode::kKeepDepthK;
  throw ArgumentError("unknown prune mode '" + std::string(text) + "'");
}

TokenRecipe prune(const TokenRecipe& recipe, const BinaryCompositionTree& tree, PruneMode mode, std::size_t k) {
  const std::size_t n = tree.leaf_count();
  if (n != recipe.ingredients.size()) throw ArgumentError("ingredient tree does not match the recipe's ingredients");
  const auto order = importance_order(tree);
  std::vector<char> keep(n, 0);
  switch (mode) {
    case PruneMode::kRemoveLastK:
      if (k >= n) throw ValidationError("pruning " + std::to_string(k) + " of " + std::to_string(n) +
                                        " ingredients would remove them all");
      for (std::size_t i = 0; i < n - k; ++i) keep[order[i]] = 1;
      break;
    case PruneMode::kKeepFirstK:
      if (k == 0) throw ValidationError("keeping zero ingredients would remove them all");
      for (std::size_t i = 0; i < std::min(k, n); ++i) keep[order[i]] = 1;
      break;
    case PruneMode::kKeepDepthK: {
      const auto depth = tree.leaf_depths();
      for (std::size_t i = 0; i < n; ++i) keep[i] = depth[i] <= k;
      if (std::none_of(keep.begin(), keep.end(), [](char c) { return c; })) {
        throw ValidationError("no ingredient lies within depth " + std::to_string(k));
      }
      break;
    }
  }

  TokenRecipe out = recipe;
  out.ingredients.clear();
  std::vector<double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    out.ingredients.push_back(recipe.ingredients[i]);
    if (recipe.ingredient_weights) weights.push_back((*recipe.ingredient_weights)[i]);
  }
  if (recipe.ingredient_weights) out.ingredient_weights = std::move(weights);
  if (out.ingredients.size() == n) return out;

  std::unordered_set<std::string> removed;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) removed.insert(recipe.ingredients[i]);
  }
  for (const auto& token : out.ingredients) removed.erase(token);
  out.instructions.clear();
  for (const auto& sentence : recipe.instructions) {
    std::vector<std::string> kept;
    for (const auto& token : sentence) {
      if (!removed.count(token)) kept.push_back(token);
    }
    if (!kept.empty()) out.instructions.push_back(std::move(kept));
  }
  if (out.instructions.empty()) throw ValidationError("recipe " + recipe.id + ": pruning emptied every instruction");
  return out;
}

Substitution substitute(const TokenRecipe& recipe, const std::string& from, const std::string& to,
                        bool retain_structure, const RecipeTrees* original_trees) {
  if (std::find(recipe.ingredients.begin(), recipe.ingredients.end(), from) == recipe.ingredients.end()) {
    throw NotFoundError("recipe " + recipe.id + " has no ingredient '" + from + "'");
  }
  if (retain_structure && !original_trees) throw ArgumentError("retaining structure needs the original trees");
  Substitution out{recipe, std::nullopt};
  auto swap_all = [&](std::vector<std::string>& tokens) { std::replace(tokens.begin(), tokens.end(), from, to); };
  swap_all(out.recipe.ingredients);
  for (auto& s : out.recipe.instructions) swap_all(s);

  if (retain_structure) {
    RecipeTrees trees = *original_trees;
    auto relabel = [](BinaryCompositionTree& t, const std::vector<std::string>& labels) {
      if (t.leaf_count() != labels.size()) throw ArgumentError("retained tree does not match the recipe");
      t.mutable_leaves() = labels;
      t.leaf_states.clear();
      t.internal_states.clear();
    };
    if (trees.ingredients) relabel(*trees.ingredients, out.recipe.ingredients);
    if (!trees.sentences.empty()) {
      if (trees.sentences.size() != out.recipe.instructions.size()) {
        throw ArgumentError("retained sentence trees do not match the recipe");
      }
      for (std::size_t i = 0; i < trees.sentences.size(); ++i) relabel(trees.sentences[i], out.recipe.instructions[i]);
    }
    out.trees = std::move(trees);
  }
  return out;
}

std::vector<double> embed_substitution(const Model& model, const Substitution& substitution) {
  return model.embed_recipe(substitution.recipe, nullptr, substitution.trees ? &*substitution.trees : nullptr);
}

// ---------------------------------------------------------------------------
// Action words

VerbLexicon::VerbLexicon(std::span<const std::string> words) : words_(words.begin(), words.end()) {}

VerbLexicon VerbLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open verb lexicon " + path.string());
  std::vector<std::string> words;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    std::string word = line.substr(b, e - b + 1);
    if (std::any_of(word.begin(), word.end(), [](unsigned char c) { return std::isupper(c); })) {
      throw ValidationError(path.string() + ":" + std::to_string(number) + ": lexicon entries must be lowercase");
    }
    words.push_back(std::move(word));
  }
  if (words.empty()) throw ValidationError("verb lexicon " + path.string() + " is empty");
  return VerbLexicon(words);
}

std::vector<std::string> lemma_candidates(const std::string& token) {
  std::vector<std::string> out;
  auto ends = [&](std::string_view suffix) {
    return token.size() > suffix.size() + 1 && token.compare(token.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  auto add_stem = [&](std::size_t cut) {
    std::string stem = token.substr(0, token.size() - cut);
    out.push_back(stem);
    out.push_back(stem + "e");
    const std::size_t m = stem.size();
    if (m >= 2 && stem[m - 1] == stem[m - 2]) out.push_back(stem.substr(0, m - 1));
  };
  if (ends("ing")) add_stem(3);
  if (ends("ed")) add_stem(2);
  if (ends("ies")) out.push_back(token.substr(0, token.size() - 3) + "y");
  if (ends("es")) out.push_back(token.substr(0, token.size() - 2));
  if (ends("s")) out.push_back(token.substr(0, token.size() - 1));
  return out;
}

bool VerbLexicon::contains(const std::string& token, bool lemmatize) const {
  if (words_.count(token)) return true;
  if (!lemmatize) return false;
  for (const auto& c : lemma_candidates(token)) {
    if (words_.count(c)) return true;
  }
  return false;
}

ActionWordStats action_word_stats(std::span<const BinaryCompositionTree> sentence_trees, const VerbLexicon& lexicon,
                                  bool lemmatize) {
  ActionWordStats stats;
  stats.sentence_trees = sentence_trees.size();
  for (const auto& tree : sentence_trees) {
    if (lexicon.contains(main_ingredient(tree), lemmatize)) ++stats.verb_count;
  }
  if (stats.sentence_trees > 0) {
    stats.percentage = 100.0 * static_cast<double>(stats.verb_count) / static_cast<double>(stats.sentence_trees);
  }
  return stats;
}

ActionWordStats action_word_stats(const Model& model, std::span<const TokenRecipe> recipes,
                                  const VerbLexicon& lexicon, bool lemmatize) {
  if (model.config().kinds.sentence != SectionKind::kTree) {
    throw ConfigError("action-word statistics need a Tree sentence encoder");
  }
  std::vector<BinaryCompositionTree> trees;
  for (const auto& r : recipes) {
    RecipeTrees t;
    model.embed_recipe(r, &t);
    for (auto& s : t.sentences) trees.push_back(std::move(s));
  }
  return action_word_stats(trees, lexicon, lemmatize);
}

}  // namespace recipetree
