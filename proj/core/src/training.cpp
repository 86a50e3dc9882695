#include "recipetree/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "recipetree/errors.hpp"

namespace recipetree {

void TrainConfig::validate() const {
  if (!(margin > 0.0 && margin < 2.0)) throw ConfigError("margin must lie in (0, 2)");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (batch_size < 2) throw ConfigError("batch size must be at least 2 to form negatives");
  if (max_images_per_recipe == 0) throw ConfigError("max_images_per_recipe must be positive");
  if (checkpoint_every > 0 && checkpoint_dir.empty()) throw ConfigError("checkpoint_every needs a checkpoint directory");
}

Var triplet_loss(Graph& g, Var p_pos, Var q_pos, Var q_neg, Var p_neg, double margin) {
  const Var d_pos = g.cosine(p_pos, q_pos);
  const Var image_side = g.relu(g.add_scalar(g.sub(g.cosine(p_pos, q_neg), d_pos), margin));
  const Var recipe_side = g.relu(g.add_scalar(g.sub(g.cosine(p_neg, q_pos), d_pos), margin));
  return g.add(image_side, recipe_side);
}

std::vector<TrainingItem> make_training_items(std::span<const TokenRecipe> recipes, const FeatureStore& features,
                                              std::size_t max_images) {
  std::vector<TrainingItem> items;
  for (const auto& r : recipes) {
    TrainingItem item{&r, {}};
    for (const auto& id : r.image_ids) {
      if (item.images.size() == max_images) break;
      if (const auto* f = features.find(id)) item.images.push_back(f);
    }
    if (!item.images.empty()) items.push_back(std::move(item));
  }
  return items;
}

namespace {

std::size_t other_index(std::mt19937_64& rng, std::size_t n, std::size_t self) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 2);
  const std::size_t k = pick(rng);
  return k >= self ? k + 1 : k;
}

}  // namespace

Var batch_loss(Graph& g, const Model& model, std::span<const TrainingItem* const> batch, double margin,
               EncodeMode mode, std::mt19937_64& rng) {
  const std::size_t n = batch.size();
  if (n < 2) throw ConfigError("a training batch needs at least two recipes to draw negatives");
  EncodeContext ctx;
  ctx.mode = mode;
  ctx.rng = &rng;
  ctx.temperature = model.config().temperature;
  ctx.hard = model.config().gumbel_hard;

  std::vector<Var> recipes, images;
  recipes.reserve(n);
  images.reserve(n);
  for (const TrainingItem* item : batch) {
    recipes.push_back(model.recipe_encoder().encode(g, *item->recipe, model.vocab(), ctx).latent);
    std::uniform_int_distribution<std::size_t> pick(0, item->images.size() - 1);
    images.push_back(model.image_projector().encode(g, *item->images[pick(rng)]));
  }
  Var total{};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t neg_image = other_index(rng, n, i);
    const std::size_t neg_recipe = other_index(rng, n, i);
    const Var loss = triplet_loss(g, recipes[i], images[i], images[neg_image], recipes[neg_recipe], margin);
    total = i == 0 ? loss : g.add(total, loss);
  }
  return g.scale(total, 1.0 / static_cast<double>(n));
}

Adam::Adam(ParameterStore& store, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& name : store.names()) {
    Tensor& t = store.at(name);
    if (!t.requires_grad()) continue;
    slots_.push_back({&t, std::vector<double>(t.size(), 0.0), std::vector<double>(t.size(), 0.0)});
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Slot& s : slots_) {
    if (!s.tensor->has_grad()) continue;
    auto w = s.tensor->values();
    auto grad = std::as_const(*s.tensor).grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * grad[i];
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * grad[i] * grad[i];
      w[i] -= lr_ * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + eps_);
    }
  }
}

TrainReport train(Model& model, std::span<const TrainingItem> items, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (items.size() < 2) throw ConfigError("training needs at least two recipes with image features");
  std::mt19937_64 rng(config.seed);
  ParameterStore& store = model.parameters();
  Adam optimizer(store, config.learning_rate, config.beta1, config.beta2, config.adam_eps);

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batches.emplace_back(start, std::min(order.size(), start + config.batch_size));
    }
    if (batches.size() > 1 && batches.back().second - batches.back().first == 1) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }

    double epoch_total = 0.0;
    for (const auto& [begin, end] : batches) {
      std::vector<const TrainingItem*> batch;
      for (std::size_t k = begin; k < end; ++k) batch.push_back(&items[order[k]]);
      store.zero_grad();
      Graph g;
      const Var loss = batch_loss(g, model, batch, config.margin, EncodeMode::kTrain, rng);
      g.backward(loss);
      optimizer.step();
      epoch_total += g.scalar(loss) * static_cast<double>(batch.size());
    }
    const double mean = epoch_total / static_cast<double>(items.size());
    report.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
    if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
      std::filesystem::create_directories(config.checkpoint_dir);
      auto path = config.checkpoint_dir / ("epoch-" + std::to_string(epoch) + ".ckpt");
      model.save(path);
      report.checkpoints.push_back(std::move(path));
    }
  }
  return report;
}

}  // namespace recipetree
