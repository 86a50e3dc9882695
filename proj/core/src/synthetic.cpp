#include "recipetree/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>

#include "recipetree/errors.hpp"

namespace recipetree {

namespace {

const std::vector<std::string> kMains = {
    "chicken",  "beef",     "pork",        "salmon",    "tofu",      "shrimp",     "lamb",      "turkey",
    "cod",      "tuna",     "eggplant",    "duck",      "green beans", "potatoes", "lentils",   "sausage",
    "zucchini", "chickpeas", "cauliflower", "mushrooms", "halibut",   "scallops",   "venison",   "tempeh",
    "squid",    "crab",     "broccoli",    "pumpkin",   "spinach",   "quinoa",     "black beans", "ham",
    "trout",    "mussels",  "asparagus",   "rice",      "bacon",     "cabbage",    "kale",      "beets"};

const std::vector<std::string> kMinors = {
    "salt",       "black pepper", "garlic",  "onion",    "olive oil", "butter",      "lemon juice", "paprika",
    "cumin",      "parsley",      "thyme",   "oregano",  "soy sauce", "ginger",      "honey",       "vinegar",
    "chili flakes", "basil",      "rosemary", "cilantro", "sugar",    "flour",       "cream",       "parmesan",
    "scallions",  "mustard",      "cinnamon", "nutmeg",  "sesame oil", "lime zest"};

const std::vector<std::string> kAdjectives = {"easy",   "classic", "spicy",  "rustic", "quick", "golden",
                                              "hearty", "simple",  "crispy", "tangy",  "savory", "smoky"};
const std::vector<std::string> kDishes = {"skillet", "stew",  "bake",  "salad", "bowl",  "casserole",
                                          "supper",  "roast", "soup",  "tacos", "curry", "platter"};

const std::vector<std::string> kPrepVerbs = {"chop", "slice", "dice", "mince", "season", "rinse", "trim"};
const std::vector<std::string> kCookVerbs = {"add",   "stir", "toss", "whisk", "combine", "fold",
                                             "sear",  "brown", "saute", "roast", "grill",  "marinate"};
const std::vector<std::string> kFinishers = {"bake for 20 minutes.", "simmer until tender.", "serve warm.",
                                             "cover and cook for 10 minutes.", "garnish and serve."};

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::string capitalise(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::vector<double> basis(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  std::vector<double> v(dim);
  for (double& x : v) x = n(rng);
  return v;
}

}  // namespace

const std::vector<std::string>& synthetic_verbs() {
  static const std::vector<std::string> verbs = [] {
    std::vector<std::string> v = kPrepVerbs;
    v.insert(v.end(), kCookVerbs.begin(), kCookVerbs.end());
    for (const char* w : {"bake", "simmer", "serve", "cover", "cook", "garnish"}) v.emplace_back(w);
    return v;
  }();
  return verbs;
}

void SyntheticSpec::validate() const {
  if (recipe_count == 0 || feature_dim == 0 || images_per_recipe == 0) {
    throw ConfigError("synthetic corpus sizes must be positive");
  }
  if (main_pool_size == 0 || main_pool_size > kMains.size()) {
    throw ConfigError("main_pool_size must lie in [1, " + std::to_string(kMains.size()) + "]");
  }
  if (ingredient_pool_size <= main_pool_size || ingredient_pool_size - main_pool_size > kMinors.size()) {
    throw ConfigError("ingredient_pool_size must exceed main_pool_size by 1.." + std::to_string(kMinors.size()));
  }
  if (ingredients_per_recipe == 0 || ingredients_per_recipe - 1 > ingredient_pool_size - main_pool_size) {
    throw ConfigError("ingredients_per_recipe must be between 1 and the number of minor ingredients + 1");
  }
  if (!(signal_strength >= 0.0 && signal_strength <= 1.0)) throw ConfigError("signal_strength must lie in [0, 1]");
  if (!(noise >= 0.0)) throw ConfigError("noise must be non-negative");
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SyntheticCorpus corpus;
  const std::vector<std::string> mains(kMains.begin(), kMains.begin() + static_cast<std::ptrdiff_t>(spec.main_pool_size));
  const std::vector<std::string> minors(
      kMinors.begin(), kMinors.begin() + static_cast<std::ptrdiff_t>(spec.ingredient_pool_size - spec.main_pool_size));
  corpus.pool = mains;
  corpus.pool.insert(corpus.pool.end(), minors.begin(), minors.end());

  std::vector<std::vector<double>> bases;
  for (std::size_t i = 0; i < corpus.pool.size(); ++i) bases.push_back(basis(rng, spec.feature_dim));

  // Mains are dealt round-robin and shuffled, so class sizes differ by at most one.
  std::vector<std::size_t> main_of(spec.recipe_count);
  for (std::size_t r = 0; r < spec.recipe_count; ++r) main_of[r] = r % mains.size();
  std::shuffle(main_of.begin(), main_of.end(), rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(spec.feature_dim)));
  for (std::size_t r = 0; r < spec.recipe_count; ++r) {
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", r);
    RecipeRecord rec;
    rec.id = id;

    const std::size_t main = main_of[r];
    std::vector<std::size_t> minor_idx(minors.size());
    for (std::size_t i = 0; i < minor_idx.size(); ++i) minor_idx[i] = mains.size() + i;
    std::shuffle(minor_idx.begin(), minor_idx.end(), rng);
    minor_idx.resize(spec.ingredients_per_recipe - 1);

    // Pool indices in list order; the main ingredient lands at a random position.
    std::vector<std::size_t> items = minor_idx;
    const std::size_t slot = std::uniform_int_distribution<std::size_t>(0, items.size())(rng);
    items.insert(items.begin() + static_cast<std::ptrdiff_t>(slot), main);

    std::vector<double> raw;
    for (std::size_t i = 0; i < items.size(); ++i) raw.push_back(i == slot ? 4.0 + 2.0 * unit(rng) : 0.2 + 1.3 * unit(rng));
    double total = 0.0;
    for (double w : raw) total += w;
    std::vector<double> weights;
    for (double w : raw) weights.push_back(1000.0 * w / total);

    for (std::size_t i : items) rec.ingredients.push_back(corpus.pool[i]);
    rec.ingredient_weights = weights;
    rec.title = pick(rng, kAdjectives) + " " + pick(rng, kDishes);

    // Main ingredient gets its own sentence; minors are mentioned in pairs.
    rec.instructions.push_back(capitalise(pick(rng, kPrepVerbs) + " the " + corpus.pool[main] + "."));
    std::vector<std::size_t> shuffled = minor_idx;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t i = 0; i < shuffled.size(); i += 2) {
      std::string s = pick(rng, kCookVerbs) + " the " + corpus.pool[shuffled[i]];
      if (i + 1 < shuffled.size()) s += " and " + corpus.pool[shuffled[i + 1]];
      rec.instructions.push_back(capitalise(s + "."));
    }
    rec.instructions.push_back(capitalise(pick(rng, kFinishers)));

    std::vector<double> clean(spec.feature_dim, 0.0);
    double minor_total = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i != slot) minor_total += weights[i];
    }
    for (std::size_t d = 0; d < spec.feature_dim; ++d) clean[d] = spec.signal_strength * bases[main][d];
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i == slot || minor_total <= 0.0) continue;
      const double share = (1.0 - spec.signal_strength) * weights[i] / minor_total;
      for (std::size_t d = 0; d < spec.feature_dim; ++d) clean[d] += share * bases[items[i]][d];
    }
    for (std::size_t k = 0; k < spec.images_per_recipe; ++k) {
      const std::string image_id = rec.id + "-img" + std::to_string(k);
      std::vector<double> f = clean;
      for (double& x : f) x += spec.noise * gauss(rng);
      corpus.features.add(image_id, std::move(f));
      rec.image_ids.push_back(image_id);
    }
    corpus.mains.push_back(corpus.pool[main]);
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

}  // namespace recipetree
