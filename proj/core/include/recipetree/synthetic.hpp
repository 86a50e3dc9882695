#pragma once

// Planted-signal corpus: every recipe has one main ingredient (the heaviest by
// weight) and its image features are dominated by that ingredient's basis vector.

#include <cstdint>
#include <string>
#include <vector>

#include "recipetree/dataset.hpp"
#include "recipetree/recipe.hpp"

namespace recipetree {

struct SyntheticSpec {
  std::size_t recipe_count = 200;
  /// Distinct ingredients overall; the first main_pool_size can be mains.
  std::size_t ingredient_pool_size = 30;
  std::size_t main_pool_size = 8;
  std::size_t ingredients_per_recipe = 6;
  /// Share of the feature vector carried by the main ingredient, in [0, 1].
  double signal_strength = 0.9;
  std::size_t feature_dim = 64;
  std::size_t images_per_recipe = 2;
  /// Standard deviation of per-image noise relative to a unit basis vector.
  double noise = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<RecipeRecord> records;
  FeatureStore features;
  /// Ingredient names in pool order (mains first).
  std::vector<std::string> pool;
  /// Raw ingredient name of each recipe's main ingredient.
  std::vector<std::string> mains;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

/// Verbs used by the instruction templates.
const std::vector<std::string>& synthetic_verbs();

}  // namespace recipetree
