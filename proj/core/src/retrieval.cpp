#include "recipetree/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "recipetree/errors.hpp"

namespace recipetree {

std::string_view to_string(Direction direction) {
  return direction == Direction::kImageToRecipe ? "image_to_recipe" : "recipe_to_image";
}

namespace {

double norm(const Latent& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> norms(std::span<const Latent> vs) {
  std::vector<double> out;
  out.reserve(vs.size());
  for (const auto& v : vs) {
    const double n = norm(v);
    if (n < 1e-12) throw DegenerateInputError("cannot rank a zero-norm latent vector");
    out.push_back(n);
  }
  return out;
}

double cosine(const Latent& a, double na, const Latent& b, double nb) {
  if (a.size() != b.size()) throw DimensionError("latent dimensions differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
  return d / (na * nb);
}

}  // namespace

std::vector<std::size_t> rank_pool(std::span<const Latent> queries, std::span<const Latent> candidates,
                                   std::span<const std::size_t> truth) {
  if (truth.size() != queries.size()) throw ValidationError("truth pairing must cover every query");
  std::vector<char> used(candidates.size(), 0);
  for (std::size_t t : truth) {
    if (t >= candidates.size() || used[t]) throw ValidationError("truth pairing is not a bijection");
    used[t] = 1;
  }
  if (queries.size() != candidates.size()) throw ValidationError("truth pairing is not a bijection");

  const auto qn = norms(queries);
  const auto cn = norms(candidates);
  std::vector<std::size_t> ranks(queries.size());
  std::vector<double> sims(candidates.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < candidates.size(); ++j) sims[j] = cosine(queries[i], qn[i], candidates[j], cn[j]);
    const std::size_t t = truth[i];
    std::size_t rank = 1;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (sims[j] > sims[t] || (sims[j] == sims[t] && j < t)) ++rank;
    }
    ranks[i] = rank;
  }
  return ranks;
}

double median_rank(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw ArgumentError("median of an empty rank list");
  std::vector<std::size_t> r(ranks.begin(), ranks.end());
  std::sort(r.begin(), r.end());
  const std::size_t n = r.size();
  return n % 2 ? static_cast<double>(r[n / 2]) : 0.5 * static_cast<double>(r[n / 2 - 1] + r[n / 2]);
}

double recall_at(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw ArgumentError("recall of an empty rank list");
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

RepeatMetrics metrics_from_ranks(std::span<const std::size_t> ranks) {
  return {median_rank(ranks), recall_at(ranks, 1), recall_at(ranks, 5), recall_at(ranks, 10)};
}

namespace {

nlohmann::ordered_json report_json(const RankingReport& r) {
  nlohmann::ordered_json j;
  j["direction"] = std::string(to_string(r.direction));
  j["pool_size"] = r.pool_size;
  j["repeats"] = r.repeats;
  j["medR"] = r.medR;
  j["recall"] = {{"1", r.r1}, {"5", r.r5}, {"10", r.r10}};
  auto& per = j["per_repeat"] = nlohmann::ordered_json::array();
  for (const auto& m : r.per_repeat) {
    per.push_back({{"medR", m.medR}, {"recall", {{"1", m.r1}, {"5", m.r5}, {"10", m.r10}}}});
  }
  return j;
}

}  // namespace

std::string RankingReport::to_json() const {
  auto j = report_json(*this);
  j["schema"] = 1;
  return j.dump(2) + "\n";
}

std::string EvaluationResult::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["reports"] = {report_json(image_to_recipe), report_json(recipe_to_image)};
  return j.dump(2) + "\n";
}

std::string EvaluationResult::to_table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %6s %7s %8s %7s %7s %7s\n", "direction", "pool", "repeats", "medR", "R@1",
                "R@5", "R@10");
  out << line;
  for (const RankingReport* r : {&image_to_recipe, &recipe_to_image}) {
    std::snprintf(line, sizeof line, "%-16s %6zu %7zu %8.2f %7.1f %7.1f %7.1f\n",
                  std::string(to_string(r->direction)).c_str(), r->pool_size, r->repeats, r->medR, r->r1, r->r5,
                  r->r10);
    out << line;
  }
  return out.str();
}

EvaluationResult evaluate_latents(std::span<const Latent> recipes, std::span<const Latent> images,
                                  std::size_t pool_size, std::size_t repeats, std::uint64_t seed) {
  if (recipes.size() != images.size()) throw ArgumentError("recipe and image latents must be aligned");
  if (pool_size == 0 || repeats == 0) throw ConfigError("pool size and repeat count must be positive");
  if (recipes.size() < pool_size) {
    throw ConfigError("evaluation needs " + std::to_string(pool_size) + " recipe-image pairs, only " +
                      std::to_string(recipes.size()) + " available");
  }
  EvaluationResult result;
  result.image_to_recipe.direction = Direction::kImageToRecipe;
  result.recipe_to_image.direction = Direction::kRecipeToImage;
  for (RankingReport* r : {&result.image_to_recipe, &result.recipe_to_image}) {
    r->pool_size = pool_size;
    r->repeats = repeats;
  }

  std::vector<std::size_t> all(recipes.size());
  std::vector<std::size_t> identity(pool_size);
  std::iota(identity.begin(), identity.end(), 0);
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(rep)};
    std::mt19937_64 rng(seq);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<Latent> pool_recipes, pool_images;
    for (std::size_t k = 0; k < pool_size; ++k) {
      pool_recipes.push_back(recipes[all[k]]);
      pool_images.push_back(images[all[k]]);
    }
    result.image_to_recipe.per_repeat.push_back(
        metrics_from_ranks(rank_pool(pool_images, pool_recipes, identity)));
    result.recipe_to_image.per_repeat.push_back(
        metrics_from_ranks(rank_pool(pool_recipes, pool_images, identity)));
  }
  for (RankingReport* r : {&result.image_to_recipe, &result.recipe_to_image}) {
    for (const auto& m : r->per_repeat) {
      r->medR += m.medR;
      r->r1 += m.r1;
      r->r5 += m.r5;
      r->r10 += m.r10;
    }
    const double n = static_cast<double>(repeats);
    r->medR /= n;
    r->r1 /= n;
    r->r5 /= n;
    r->r10 /= n;
  }
  return result;
}

EvaluationResult evaluate(const Model& model, std::span<const TokenRecipe> recipes, const FeatureStore& features,
                          std::size_t pool_size, std::size_t repeats, std::uint64_t seed) {
  std::vector<Latent> recipe_latents, image_latents;
  for (const auto& r : recipes) {
    const std::vector<double>* feature = nullptr;
    for (const auto& id : r.image_ids) {
      if ((feature = features.find(id))) break;
    }
    if (!feature) continue;
    recipe_latents.push_back(model.embed_recipe(r));
    image_latents.push_back(model.embed_image(*feature));
  }
  return evaluate_latents(recipe_latents, image_latents, pool_size, repeats, seed);
}

double substitution_success_rate(std::span<const SubstitutionQuery> queries, const RetrievalCorpus& corpus,
                                 const std::string& ingredient, const SubstitutionOptions& options) {
  if (queries.empty()) throw ArgumentError("substitution success rate needs at least one query");
  if (options.top_k == 0) throw ArgumentError("top_k must be positive");
  const bool to_images = options.target == SubstitutionTarget::kImage;
  const auto& candidates = to_images ? corpus.images : corpus.recipes;
  if (candidates.size() != corpus.ingredients.size()) {
    throw ArgumentError("retrieval corpus latents and ingredient sets are not aligned");
  }
  const auto cn = norms(candidates);
  std::size_t successes = 0;
  for (const auto& q : queries) {
    const double qn = norm(q.latent);
    if (qn < 1e-12) throw DegenerateInputError("cannot rank a zero-norm latent vector");
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (!to_images && options.exclude_self && j == q.source) continue;
      scored.emplace_back(cosine(q.latent, qn, candidates[j], cn[j]), j);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const std::size_t k = std::min(options.top_k, scored.size());
    for (std::size_t i = 0; i < k; ++i) {
      if (corpus.ingredients[scored[i].second].count(ingredient)) {
        ++successes;
        break;
      }
    }
  }
  return 100.0 * static_cast<double>(successes) / static_cast<double>(queries.size());
}

}  // namespace recipetree
