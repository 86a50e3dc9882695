#pragma once

// Analyses over inferred composition trees. One importance order is used
// everywhere: shallower leaves first; among equal depths the leaf whose parent
// was merged later comes first; then the earlier list position.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "recipetree/encoders.hpp"
#include "recipetree/model.hpp"
#include "recipetree/recipe.hpp"
#include "recipetree/tree.hpp"

namespace recipetree {

enum class TreeSection { kIngredients, kSentence };
std::string_view to_string(TreeSection section);

struct LeafDepthRecord {
  std::string token;
  std::size_t depth = 0;
  std::string recipe_id;
  TreeSection section = TreeSection::kIngredients;

  bool operator==(const LeafDepthRecord&) const = default;
};

std::vector<LeafDepthRecord> leaf_depths(const BinaryCompositionTree& tree, const std::string& recipe_id = {},
                                         TreeSection section = TreeSection::kIngredients);

/// Leaf indices, most important first.
std::vector<std::size_t> importance_order(const BinaryCompositionTree& tree);
std::size_t main_leaf(const BinaryCompositionTree& tree);
const std::string& main_ingredient(const BinaryCompositionTree& tree);

struct MainIngredientEval {
  std::size_t recipes = 0;
  double medR = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  std::vector<std::size_t> ranks;
};

/// 1-based position of leaf `gold` in importance_order(tree).
std::size_t importance_rank(const BinaryCompositionTree& tree, std::size_t gold);

/// Gold main ingredient = max weight (first on ties). Needs a Tree ingredient
/// encoder (ConfigError otherwise) and weights on every recipe (ValidationError).
MainIngredientEval main_ingredient_rank_eval(const Model& model, std::span<const TokenRecipe> recipes);
MainIngredientEval main_ingredient_rank_eval(std::span<const BinaryCompositionTree> trees,
                                             std::span<const std::size_t> gold);

enum class PruneMode { kRemoveLastK, kKeepFirstK, kKeepDepthK };
std::string_view to_string(PruneMode mode);
PruneMode parse_prune_mode(std::string_view text);

/// Drops ingredients per `mode` using the importance order of `tree` (the
/// ingredient tree of `recipe`). Dropped tokens are removed from instruction
/// sentences as whole tokens; sentences left empty are dropped.
TokenRecipe prune(const TokenRecipe& recipe, const BinaryCompositionTree& tree, PruneMode mode, std::size_t k);

struct Substitution {
  TokenRecipe recipe;
  /// Original tree shapes relabelled with the new tokens (retain_structure only).
  std::optional<RecipeTrees> trees;
};

/// Replaces `from` by `to` in the ingredient list and every instruction sentence.
/// With retain_structure, `original_trees` supplies the shapes to replay.
Substitution substitute(const TokenRecipe& recipe, const std::string& from, const std::string& to,
                        bool retain_structure, const RecipeTrees* original_trees = nullptr);

/// Embeds a substitution result, replaying retained trees when present.
std::vector<double> embed_substitution(const Model& model, const Substitution& substitution);

class VerbLexicon {
 public:
  VerbLexicon() = default;
  explicit VerbLexicon(std::span<const std::string> words);
  /// One lemma per line; '#' starts a comment. Throws ValidationError if the file
  /// yields no entries or an entry is not lowercase.
  static VerbLexicon load(const std::filesystem::path& path);

  std::size_t size() const { return words_.size(); }
  bool contains(const std::string& token, bool lemmatize = false) const;

 private:
  std::unordered_set<std::string> words_;
};

/// Crude suffix-stripping candidates ("covered" -> "cover", "chopped" -> "chop").
std::vector<std::string> lemma_candidates(const std::string& token);

struct ActionWordStats {
  std::size_t sentence_trees = 0;
  std::size_t verb_count = 0;
  double percentage = 0.0;
};

/// Shallowest leaf of each sentence tree, checked against the lexicon.
ActionWordStats action_word_stats(std::span<const BinaryCompositionTree> sentence_trees, const VerbLexicon& lexicon,
                                  bool lemmatize = false);
/// Needs a Tree sentence encoder (ConfigError otherwise).
ActionWordStats action_word_stats(const Model& model, std::span<const TokenRecipe> recipes,
                                  const VerbLexicon& lexicon, bool lemmatize = false);

}  // namespace recipetree
