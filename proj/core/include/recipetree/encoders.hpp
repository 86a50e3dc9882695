#pragma once

// Text-side encoders: bi-GRU, bi-LSTM, Set (sum of projected vectors) and the
// binary Gumbel Tree-LSTM, plus their composition into the full recipe encoder.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "recipetree/autodiff.hpp"
#include "recipetree/recipe.hpp"
#include "recipetree/tree.hpp"

namespace recipetree {

enum class SectionKind : char { kSet = 'S', kGru = 'G', kLstm = 'L', kTree = 'T' };

/// Encoder choice per section, written like "T+L+L" (ingredients, sentence,
/// instruction-level). The title encoder is always a bi-GRU.
struct EncoderKinds {
  SectionKind ingredient = SectionKind::kTree;
  SectionKind sentence = SectionKind::kLstm;
  SectionKind instruction = SectionKind::kLstm;

  std::string name() const;
  static EncoderKinds parse(std::string_view text);
  bool operator==(const EncoderKinds&) const = default;
};

struct ModelConfig {
  EncoderKinds kinds;
  std::size_t word_dim = 300;
  std::size_t section_dim = 600;
  std::size_t latent_dim = 1024;
  std::size_t image_dim = 2048;
  double temperature = 1.0;
  /// Straight-through hard selection in training mode.
  bool gumbel_hard = true;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class EncodeMode {
  /// Gumbel noise; hard (straight-through) or soft per ModelConfig::gumbel_hard.
  kTrain,
  /// Gumbel noise with the soft relaxation; smooth surrogate for gradient checks.
  kTrainSoft,
  /// No noise, argmax selection.
  kInfer,
};

struct EncodeContext {
  EncodeMode mode = EncodeMode::kInfer;
  std::mt19937_64* rng = nullptr;  // required unless mode == kInfer
  double temperature = 1.0;
  bool hard = true;
  /// Keep (h, c) of every tree node on the returned trees.
  bool record_states = false;
};

/// y = W x + b, with W: out x in.
struct Linear {
  Tensor* weight = nullptr;
  Tensor* bias = nullptr;

  static Linear create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                       std::mt19937_64& rng);
  std::size_t in_dim() const { return weight->cols(); }
  std::size_t out_dim() const { return weight->rows(); }
  Var apply(Graph& g, Var x) const;
};

struct CellState {
  Var h;
  Var c;
};

/// Chain LSTM cell, gate blocks ordered (i, f, o, g).
class LstmCell {
 public:
  LstmCell(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
           std::mt19937_64& rng);
  CellState step(Graph& g, Var x, CellState prev) const;
  CellState initial(Graph& g) const;
  std::size_t hidden() const { return hidden_; }
  const Linear& gates() const { return gates_; }

 private:
  Linear gates_;
  std::size_t hidden_;
};

/// GRU cell: z, r = sigma(W_zr [x; h] + b_zr); n = tanh(W_n [x; r*h] + b_n);
/// h' = (1 - z) * n + z * h.
class GruCell {
 public:
  GruCell(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
          std::mt19937_64& rng);
  Var step(Graph& g, Var x, Var h) const;
  Var initial(Graph& g) const;
  std::size_t hidden() const { return hidden_; }
  const Linear& gates() const { return gates_; }
  const Linear& candidate() const { return candidate_; }

 private:
  Linear gates_;
  Linear candidate_;
  std::size_t hidden_;
};

/// Binary Tree-LSTM composition with a leaf transform and a structure query.
/// Gate blocks of W_comp are ordered (i, f_l, f_r, o, g).
class TreeLstmCell {
 public:
  TreeLstmCell(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
               std::mt19937_64& rng);

  /// (h, c) = split(W_leaf x + b_leaf).
  CellState leaf(Graph& g, Var x) const;
  /// Parent state from two children.
  CellState compose(Graph& g, CellState left, CellState right) const;
  Var score(Graph& g, Var h) const;

  std::size_t hidden() const { return hidden_; }
  const Linear& leaf_transform() const { return leaf_; }
  const Linear& composition() const { return comp_; }
  Tensor& query() const { return *query_; }

 private:
  Linear leaf_;
  Linear comp_;
  Tensor* query_;
  std::size_t hidden_;
};

struct TreeEncoding {
  CellState root;
  BinaryCompositionTree tree;
};

/// Bottom-up merging: with k frontier nodes, all k-1 adjacent candidate parents
/// are composed, scored against the query, and one is selected (Gumbel
/// straight-through in training, argmax in inference) until one node remains.
TreeEncoding tree_encode(Graph& g, const TreeLstmCell& cell, std::span<const Var> inputs,
                         std::span<const std::string> labels, const EncodeContext& ctx);

/// Replays a fixed tree shape over new inputs (only leaf vectors change).
/// The returned tree carries `labels` as its leaves.
TreeEncoding tree_encode_fixed(Graph& g, const TreeLstmCell& cell, std::span<const Var> inputs,
                               std::span<const std::string> labels, const BinaryCompositionTree& shape,
                               const EncodeContext& ctx);

/// Forward and backward final hidden states, concatenated.
Var bilstm_encode(Graph& g, const LstmCell& forward, const LstmCell& backward, std::span<const Var> inputs);
Var bigru_encode(Graph& g, const GruCell& forward, const GruCell& backward, std::span<const Var> inputs);
/// Sum over inputs of a shared affine projection.
Var set_encode(Graph& g, const Linear& projection, std::span<const Var> inputs);

struct SectionOutput {
  Var vector;
  std::optional<BinaryCompositionTree> tree;
};

class SectionEncoder {
 public:
  virtual ~SectionEncoder() = default;
  virtual SectionKind kind() const = 0;
  virtual std::size_t output_dim() const = 0;
  /// `forced` replays a tree shape (Tree encoders only; ignored otherwise).
  virtual SectionOutput encode(Graph& g, std::span<const Var> inputs, std::span<const std::string> labels,
                               const EncodeContext& ctx, const BinaryCompositionTree* forced) const = 0;
};

std::unique_ptr<SectionEncoder> make_section_encoder(SectionKind kind, ParameterStore& store,
                                                     const std::string& name, std::size_t input,
                                                     std::size_t output, std::mt19937_64& rng);

/// Trees inferred while encoding one recipe. Members are empty for sections that
/// are not Tree-encoded.
struct RecipeTrees {
  std::optional<BinaryCompositionTree> ingredients;
  std::vector<BinaryCompositionTree> sentences;
  std::optional<BinaryCompositionTree> instructions;
};

/// Three FC layers; the middle one is shared between the text and image stacks.
/// tanh between layers, final layer linear.
struct ProjectionStack {
  Linear first;
  Linear shared;
  Linear last;

  Var apply(Graph& g, Var x) const;
};

struct RecipeEncoding {
  Var latent;
  RecipeTrees trees;
};

class RecipeEncoder {
 public:
  RecipeEncoder(const ModelConfig& config, ParameterStore& store, Tensor& words, const Linear& shared,
                std::mt19937_64& rng);

  /// Title -> bi-GRU; ingredients -> configured encoder; each sentence -> sentence
  /// encoder, then sentence vectors -> instruction encoder; concat -> FC stack.
  RecipeEncoding encode(Graph& g, const TokenRecipe& recipe, const Vocabulary& vocab, const EncodeContext& ctx,
                        const RecipeTrees* forced = nullptr) const;

  const ProjectionStack& projection() const { return projection_; }
  const SectionEncoder& ingredient_encoder() const { return *ingredients_; }
  const SectionEncoder& sentence_encoder() const { return *sentences_; }
  const SectionEncoder& instruction_encoder() const { return *instructions_; }

 private:
  std::vector<Var> words(Graph& g, std::span<const std::string> tokens, const Vocabulary& vocab) const;

  ModelConfig config_;
  Tensor* words_;
  GruCell title_forward_;
  GruCell title_backward_;
  std::unique_ptr<SectionEncoder> ingredients_;
  std::unique_ptr<SectionEncoder> sentences_;
  std::unique_ptr<SectionEncoder> instructions_;
  ProjectionStack projection_;
};

/// Maps a precomputed image feature vector into the latent space.
class ImageProjector {
 public:
  ImageProjector(const ModelConfig& config, ParameterStore& store, const Linear& shared, std::mt19937_64& rng);
  Var encode(Graph& g, std::span<const double> feature) const;
  const ProjectionStack& projection() const { return projection_; }

 private:
  std::size_t input_dim_;
  ProjectionStack projection_;
};

}  // namespace recipetree
