#include "recipetree/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "recipetree/binary_io.hpp"
#include "recipetree/errors.hpp"
#include "recipetree/text_prep.hpp"

namespace recipetree {

namespace {

constexpr char kTableMagic[5] = "RTWT";
constexpr std::uint8_t kTableVersion = 1;

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

WordTable::WordTable(std::size_t vocab_size, std::size_t dim, bool trainable)
    : matrix_(Tensor::zeros({vocab_size, dim}, trainable)) {
  if (vocab_size <= Vocabulary::kPad) throw ArgumentError("word table needs room for UNK and PAD rows");
}

WordTable WordTable::random(std::size_t vocab_size, std::size_t dim, std::uint64_t seed, bool trainable) {
  WordTable t(vocab_size, dim, trainable);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  for (double& v : t.matrix_.values()) v = dist(rng);
  for (double& v : t.row(Vocabulary::kPad)) v = 0.0;
  return t;
}

std::span<const double> WordTable::row(std::size_t index) const {
  if (index >= vocab_size()) throw IndexError("word table row out of range: " + std::to_string(index));
  return matrix_.values().subspan(index * dim(), dim());
}

std::span<double> WordTable::row(std::size_t index) {
  if (index >= vocab_size()) throw IndexError("word table row out of range: " + std::to_string(index));
  return matrix_.values().subspan(index * dim(), dim());
}

void WordTable::save(const std::filesystem::path& path, std::uint64_t vocab_hash) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write word table: " + path.string());
  binary::write_magic(out, kTableMagic);
  binary::write_u8(out, kTableVersion);
  binary::write_u64(out, vocab_hash);
  binary::write_u64(out, vocab_size());
  binary::write_u64(out, dim());
  binary::write_f64s(out, matrix_.values());
}

WordTable WordTable::load(const std::filesystem::path& path, std::uint64_t vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read word table: " + path.string());
  binary::expect_magic(in, kTableMagic, "word table");
  const auto version = binary::read_u8(in);
  if (version != kTableVersion) throw ValidationError("word table: unsupported version " + std::to_string(version));
  const auto stored_hash = binary::read_u64(in);
  if (stored_hash != vocab_hash) throw ValidationError("word table was built for a different vocabulary");
  const auto rows = binary::read_u64(in);
  const auto cols = binary::read_u64(in);
  WordTable t(rows, cols);
  auto values = binary::read_f64s(in, rows * cols);
  std::copy(values.begin(), values.end(), t.matrix_.values().begin());
  return t;
}

std::vector<Var> lookup(Graph& graph, Tensor& table, std::span<const std::size_t> indices) {
  std::vector<Var> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) out.push_back(graph.row(table, idx, idx == Vocabulary::kPad));
  return out;
}

SkipGramReport pretrain_skipgram(std::span<const std::vector<std::size_t>> sentences, WordTable& table,
                                 const SkipGramOptions& options) {
  if (options.window < 1) throw ArgumentError("skip-gram window must be >= 1");
  if (options.negatives < 1) throw ArgumentError("skip-gram needs at least one negative sample");

  const std::size_t vocab = table.vocab_size();
  const std::size_t dim = table.dim();
  std::vector<double> unigram(vocab, 0.0);
  std::size_t pairs_per_epoch = 0;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= vocab) throw IndexError("skip-gram token index out of range: " + std::to_string(s[i]));
      if (s[i] == Vocabulary::kPad) continue;
      unigram[s[i]] += 1.0;
      const std::size_t lo = i >= options.window ? i - options.window : 0;
      const std::size_t hi = std::min(s.size() - 1, i + options.window);
      pairs_per_epoch += hi - lo;
    }
  }
  const double total = std::accumulate(unigram.begin(), unigram.end(), 0.0);
  if (total == 0.0) throw IngestionError("skip-gram corpus is empty");

  SkipGramReport report;
  if (options.epochs == 0) return report;

  std::vector<double> cumulative(vocab);
  double acc = 0.0;
  for (std::size_t i = 0; i < vocab; ++i) {
    acc += std::pow(unigram[i], 0.75);
    cumulative[i] = acc;
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto draw_negative = [&] {
    const double u = uniform(rng) * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), vocab - 1);
  };

  std::vector<double> context(vocab * dim, 0.0);
  std::vector<double> grad_in(dim);
  const double total_steps = static_cast<double>(pairs_per_epoch * options.epochs);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t epoch_pairs = 0;
    for (const auto& s : sentences) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        const std::size_t center = s[i];
        if (center == Vocabulary::kPad) continue;
        const std::size_t lo = i >= options.window ? i - options.window : 0;
        const std::size_t hi = std::min(s.size() - 1, i + options.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i || s[j] == Vocabulary::kPad) continue;
          const double lr =
              options.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(step) / std::max(1.0, total_steps));
          ++step;
          auto in_vec = table.row(center);
          std::fill(grad_in.begin(), grad_in.end(), 0.0);
          double pair_loss = 0.0;
          for (std::size_t k = 0; k <= options.negatives; ++k) {
            const std::size_t target = k == 0 ? s[j] : draw_negative();
            if (k > 0 && target == s[j]) continue;
            const double label = k == 0 ? 1.0 : 0.0;
            double* out_vec = context.data() + target * dim;
            double score = 0.0;
            for (std::size_t d = 0; d < dim; ++d) score += in_vec[d] * out_vec[d];
            pair_loss -= label > 0 ? log_sigmoid(score) : log_sigmoid(-score);
            const double g = lr * (label - sigmoid(score));
            for (std::size_t d = 0; d < dim; ++d) {
              grad_in[d] += g * out_vec[d];
              out_vec[d] += g * in_vec[d];
            }
          }
          for (std::size_t d = 0; d < dim; ++d) in_vec[d] += grad_in[d];
          epoch_loss += pair_loss;
          ++epoch_pairs;
        }
      }
    }
    report.epoch_loss.push_back(epoch_pairs ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0);
  }
  return report;
}

}  // namespace recipetree
