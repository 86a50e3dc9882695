#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recipetree/dataset.hpp"
#include "recipetree/model.hpp"

namespace recipetree {

using Latent = std::vector<double>;

enum class Direction { kImageToRecipe, kRecipeToImage };
std::string_view to_string(Direction direction);

/// 1-based rank of each query's true match among `candidates`, sorted by
/// descending cosine. Ties keep candidate order. `truth[i]` is the candidate
/// index matching query i and must be a bijection.
std::vector<std::size_t> rank_pool(std::span<const Latent> queries, std::span<const Latent> candidates,
                                   std::span<const std::size_t> truth);

/// Median of ranks; the mean of the two middle values for even counts.
double median_rank(std::span<const std::size_t> ranks);
/// Percentage of ranks <= k.
double recall_at(std::span<const std::size_t> ranks, std::size_t k);

struct RepeatMetrics {
  double medR = 0.0;
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
};

RepeatMetrics metrics_from_ranks(std::span<const std::size_t> ranks);

struct RankingReport {
  Direction direction = Direction::kImageToRecipe;
  std::size_t pool_size = 0;
  std::size_t repeats = 0;
  double medR = 0.0;
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  std::vector<RepeatMetrics> per_repeat;

  std::string to_json() const;
};

struct EvaluationResult {
  RankingReport image_to_recipe;
  RankingReport recipe_to_image;

  /// {"schema": 1, "reports": [...]}, pretty-printed, newline-terminated.
  std::string to_json() const;
  std::string to_table() const;
};

/// Pools of `pool_size` aligned pairs are drawn `repeats` times (repeat r seeded
/// from (seed, r)); metrics are averaged over repeats.
EvaluationResult evaluate_latents(std::span<const Latent> recipes, std::span<const Latent> images,
                                  std::size_t pool_size, std::size_t repeats, std::uint64_t seed);

/// Pairs every recipe with its first known image and embeds both sides in
/// inference mode. Throws ConfigError when fewer than pool_size pairs exist.
EvaluationResult evaluate(const Model& model, std::span<const TokenRecipe> recipes, const FeatureStore& features,
                          std::size_t pool_size, std::size_t repeats, std::uint64_t seed);

enum class SubstitutionTarget {
  /// Retrieve among image latents (R-2-I).
  kImage,
  /// Retrieve among recipe latents (R-2-R).
  kRecipe,
};

/// Embedded retrieval corpus. images[i] and recipes[i] belong to corpus recipe
/// i, whose canonical ingredients are ingredients[i].
struct RetrievalCorpus {
  std::vector<Latent> recipes;
  std::vector<Latent> images;
  std::vector<std::set<std::string>> ingredients;
};

struct SubstitutionQuery {
  Latent latent;
  /// Corpus index of the recipe the query was derived from.
  std::size_t source = 0;
};

struct SubstitutionOptions {
  SubstitutionTarget target = SubstitutionTarget::kImage;
  std::size_t top_k = 1;
  /// R-2-R only: drop the query's own source recipe from the candidates.
  bool exclude_self = true;
};

/// Percentage of queries whose top-k retrieved items include a recipe containing
/// `ingredient`.
double substitution_success_rate(std::span<const SubstitutionQuery> queries, const RetrievalCorpus& corpus,
                                 const std::string& ingredient, const SubstitutionOptions& options = {});

}  // namespace recipetree
