#pragma once

// Flat `key = value` configuration shared by the CLI commands. Lines starting
// with '#' are comments; unknown keys are rejected.
//
//   encoders              T+L+L      ingredient+sentence+instruction encoders
//   word_dim              300
//   section_dim           600
//   latent_dim            1024
//   image_dim             2048
//   temperature           1.0        Gumbel-softmax temperature
//   gumbel_hard           true
//   margin                0.3
//   learning_rate         0.001
//   batch_size            32
//   epochs                10
//   max_images_per_recipe 5
//   checkpoint_every      0
//   seed                  0
//   min_count             10         vocabulary frequency cut-off
//   proximity_threshold   0.85       embedding-proximity merge proposals
//   skipgram_epochs       5
//   skipgram_window       5
//   skipgram_negatives    5
//   pool_size             1000
//   repeats               10
//   synth_recipes         200
//   synth_pool            30
//   synth_main_pool       8
//   synth_ingredients     6
//   synth_signal          0.9
//   synth_noise           0.05
//   synth_images          2

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "recipetree/embeddings.hpp"
#include "recipetree/encoders.hpp"
#include "recipetree/synthetic.hpp"
#include "recipetree/training.hpp"

namespace recipetree {

struct AppConfig {
  AppConfig() { synth.feature_dim = model.image_dim; }

  ModelConfig model;
  TrainConfig train;
  SkipGramOptions skipgram;
  SyntheticSpec synth;
  std::uint64_t seed = 0;
  std::size_t min_count = 10;
  double proximity_threshold = 0.85;
  std::size_t pool_size = 1000;
  std::size_t repeats = 10;

  /// Propagates `seed` into the per-module seeds.
  void set_seed(std::uint64_t value);
};

AppConfig parse_config(std::string_view text, const std::string& source = "<config>");
AppConfig load_config(const std::filesystem::path& path);

}  // namespace recipetree
