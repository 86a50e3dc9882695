#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "recipetree/autodiff.hpp"
#include "recipetree/embeddings.hpp"
#include "recipetree/encoders.hpp"
#include "recipetree/recipe.hpp"
#include "recipetree/text_prep.hpp"

namespace recipetree {

/// Recipe encoder, image projector and word table over one ParameterStore. The
/// middle projection layer ("shared.fc2") is a single pair of tensors referenced
/// by both stacks.
class Model {
 public:
  Model(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed);
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::uint64_t seed() const { return seed_; }

  ParameterStore& parameters() { return *store_; }
  const ParameterStore& parameters() const { return *store_; }
  Tensor& words() { return *words_; }
  const RecipeEncoder& recipe_encoder() const { return *recipe_; }
  const ImageProjector& image_projector() const { return *image_; }
  const Linear& shared_layer() const { return shared_; }

  /// Copies pretrained vectors in; the table must match |V| x word_dim.
  void set_word_vectors(const WordTable& table);

  /// Inference-mode (noise-free, argmax trees) embeddings.
  std::vector<double> embed_recipe(const TokenRecipe& recipe, RecipeTrees* trees = nullptr,
                                   const RecipeTrees* forced = nullptr, bool record_states = false) const;
  std::vector<double> embed_image(std::span<const double> feature) const;

  /// Magic "RTCK", version, config, vocabulary hash, seed, then named tensors.
  void save(const std::filesystem::path& path) const;
  /// `vocab` must hash to the value stored in the checkpoint.
  static Model load(const std::filesystem::path& path, const Vocabulary& vocab);

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  std::uint64_t seed_;
  std::unique_ptr<ParameterStore> store_;
  Tensor* words_ = nullptr;
  Linear shared_;
  std::unique_ptr<RecipeEncoder> recipe_;
  std::unique_ptr<ImageProjector> image_;
};

}  // namespace recipetree
