#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "recipetree/autodiff.hpp"
#include "recipetree/dataset.hpp"
#include "recipetree/model.hpp"

namespace recipetree {

struct TrainConfig {
  double margin = 0.3;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::size_t max_images_per_recipe = 5;
  std::uint64_t seed = 0;
  /// Write a checkpoint every N epochs (0 disables) into checkpoint_dir.
  std::size_t checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

/// Hinge form of the bidirectional triplet objective:
///   max(0, m - d(p+, q+) + d(p+, q-)) + max(0, m - d(p+, q+) + d(p-, q+))
/// with d the cosine similarity.
Var triplet_loss(Graph& g, Var p_pos, Var q_pos, Var q_neg, Var p_neg, double margin);

/// A recipe with the feature vectors of its usable images.
struct TrainingItem {
  const TokenRecipe* recipe = nullptr;
  std::vector<const std::vector<double>*> images;
};

/// Keeps recipes with at least one known image feature, limited to the first
/// `max_images` image ids.
std::vector<TrainingItem> make_training_items(std::span<const TokenRecipe> recipes, const FeatureStore& features,
                                              std::size_t max_images);

/// Mean triplet loss over one batch. Each anchor draws one image from its own
/// list, then a negative image and a negative recipe uniformly from the other
/// batch members. The encoder runs in `mode`, drawing noise from `rng`.
Var batch_loss(Graph& g, const Model& model, std::span<const TrainingItem* const> batch, double margin,
               EncodeMode mode, std::mt19937_64& rng);

/// Dense Adam over every tensor of a ParameterStore that requires grad.
class Adam {
 public:
  Adam(ParameterStore& store, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step();
  std::uint64_t steps() const { return t_; }

 private:
  struct Slot {
    Tensor* tensor;
    std::vector<double> m;
    std::vector<double> v;
  };
  std::vector<Slot> slots_;
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<std::filesystem::path> checkpoints;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Shuffled mini-batches per epoch; a trailing single-item batch is folded into
/// the previous one so every anchor has a negative.
TrainReport train(Model& model, std::span<const TrainingItem> items, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace recipetree
