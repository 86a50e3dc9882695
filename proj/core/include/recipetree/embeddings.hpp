#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "recipetree/autodiff.hpp"

namespace recipetree {

/// |V| x D word-vector matrix. Row Vocabulary::kPad is all zeros and never
/// receives gradient.
class WordTable {
 public:
  static constexpr std::size_t kDefaultDim = 300;

  WordTable() = default;
  WordTable(std::size_t vocab_size, std::size_t dim, bool trainable = true);

  /// Uniform(-0.05, 0.05) initialisation with a zero PAD row.
  static WordTable random(std::size_t vocab_size, std::size_t dim, std::uint64_t seed, bool trainable = true);

  std::size_t vocab_size() const { return matrix_.rows(); }
  std::size_t dim() const { return matrix_.cols(); }
  bool trainable() const { return matrix_.requires_grad(); }

  Tensor& matrix() { return matrix_; }
  const Tensor& matrix() const { return matrix_; }
  std::span<const double> row(std::size_t index) const;
  std::span<double> row(std::size_t index);

  /// Versioned binary: magic "RTWT", version byte, vocabulary hash, rows, dim, values.
  void save(const std::filesystem::path& path, std::uint64_t vocab_hash) const;
  /// Throws ValidationError if the stored vocabulary hash differs from `vocab_hash`.
  static WordTable load(const std::filesystem::path& path, std::uint64_t vocab_hash);

 private:
  Tensor matrix_;
};

/// Binds table rows as graph nodes. The PAD row is bound frozen.
std::vector<Var> lookup(Graph& graph, Tensor& table, std::span<const std::size_t> indices);

struct SkipGramOptions {
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 0;
};

struct SkipGramReport {
  /// Mean negative-sampling loss per (center, context) pair, one entry per epoch.
  std::vector<double> epoch_loss;
};

/// Skip-gram with negative sampling: logistic loss on one true context and
/// `negatives` draws from the unigram^0.75 distribution. Updates `table` in place
/// (PAD excluded). Deterministic for a fixed seed.
SkipGramReport pretrain_skipgram(std::span<const std::vector<std::size_t>> sentences, WordTable& table,
                                 const SkipGramOptions& options);

}  // namespace recipetree
