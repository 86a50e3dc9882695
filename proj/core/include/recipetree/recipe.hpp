#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recipetree/text_prep.hpp"

namespace recipetree {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

/// One recipe as stored on disk (JSONL, snake_case keys).
struct RecipeRecord {
  std::string id;
  std::string title;
  std::vector<std::string> ingredients;
  std::vector<std::string> instructions;
  std::vector<std::string> image_ids;
  /// Grams, normalised to a 1000 g total; aligned 1:1 with `ingredients`.
  std::optional<std::vector<double>> ingredient_weights;
  std::optional<Split> split;
};

/// A recipe after tokenisation and canonicalisation. Each ingredient is a single
/// canonical token; each instruction is one tokenised sentence.
struct TokenRecipe {
  std::string id;
  std::vector<std::string> title;
  std::vector<std::string> ingredients;
  std::vector<std::vector<std::string>> instructions;
  std::vector<std::string> image_ids;
  std::optional<std::vector<double>> ingredient_weights;
  Split split = Split::kTrain;

  bool operator==(const TokenRecipe&) const = default;
};

TokenRecipe tokenize_recipe(const RecipeRecord& record, const CanonicalMap& canon);

/// Every token sequence in the recipe (title, ingredient list, each sentence).
std::vector<std::vector<std::string>> token_sequences(const TokenRecipe& recipe);

}  // namespace recipetree
