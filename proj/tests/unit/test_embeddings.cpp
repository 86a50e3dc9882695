#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "recipetree/embeddings.hpp"
#include "recipetree/errors.hpp"
#include "recipetree/text_prep.hpp"
#include "oracles.hpp"

using namespace recipetree;

namespace {

std::vector<double> row_of(const WordTable& t, std::size_t i) {
  auto r = t.row(i);
  return {r.begin(), r.end()};
}

// Tokens 2 and 3 always appear together; tokens 4 and 5 never share a sentence.
std::vector<std::vector<std::size_t>> planted_corpus() {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> filler(6, 29);
  std::vector<std::vector<std::size_t>> corpus;
  for (int s = 0; s < 100; ++s) {
    std::vector<std::size_t> sent;
    for (int k = 0; k < 3; ++k) sent.push_back(filler(rng));
    if (s % 2 == 0) {
      sent.push_back(2);
      sent.push_back(3);
      sent.push_back(4);
    } else {
      sent.push_back(5);
    }
    for (int k = 0; k < 3; ++k) sent.push_back(filler(rng));
    corpus.push_back(sent);
  }
  return corpus;
}

}  // namespace

TEST(WordTable, RandomInitHasZeroPadRow) {
  auto t = WordTable::random(10, 8, 1);
  for (double v : t.row(Vocabulary::kPad)) EXPECT_EQ(v, 0.0);
  for (std::size_t r = 0; r < 10; ++r)
    for (double v : t.row(r)) EXPECT_LE(std::abs(v), 0.05);
  EXPECT_EQ(t.vocab_size(), 10u);
  EXPECT_TRUE(t.trainable());
}

TEST(WordTable, SaveLoadAndHashCheck) {
  auto t = WordTable::random(6, 4, 2);
  auto path = std::filesystem::temp_directory_path() / "recipetree_table.bin";
  t.save(path, 1234);
  auto loaded = WordTable::load(path, 1234);
  for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(row_of(loaded, r), row_of(t, r));
  EXPECT_THROW(WordTable::load(path, 99), ValidationError);
}

TEST(Lookup, PadIsZeroAndFrozen) {
  auto t = WordTable::random(5, 3, 3);
  Graph g;
  std::vector<std::size_t> idx = {Vocabulary::kPad, 2};
  auto rows = lookup(g, t.matrix(), idx);
  for (double v : g.value(rows[0])) EXPECT_EQ(v, 0.0);
  t.matrix().zero_grad();
  g.backward(g.add(g.sum(rows[0]), g.sum(rows[1])));
  auto grad = t.matrix().grad();
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_EQ(grad[Vocabulary::kPad * 3 + d], 0.0);
    EXPECT_EQ(grad[2 * 3 + d], 1.0);
    EXPECT_EQ(grad[3 * 3 + d], 0.0);
  }
}

TEST(Lookup, RepeatedIndexAccumulates) {
  auto t = WordTable::random(5, 2, 4);
  t.matrix().zero_grad();
  Graph g;
  std::vector<std::size_t> idx = {3, 3};
  auto rows = lookup(g, t.matrix(), idx);
  g.backward(g.sum(g.add(rows[0], rows[1])));
  EXPECT_EQ(t.matrix().grad()[3 * 2], 2.0);
  EXPECT_EQ(t.matrix().grad()[3 * 2 + 1], 2.0);
}

TEST(Lookup, OutOfRangeIsIndexError) {
  auto t = WordTable::random(5, 2, 4);
  Graph g;
  std::vector<std::size_t> idx = {5};
  EXPECT_THROW(lookup(g, t.matrix(), idx), IndexError);
}

TEST(SkipGram, PlantedCooccurrenceOrdersSimilarity) {
  auto corpus = planted_corpus();
  auto table = WordTable::random(30, 16, 5);
  SkipGramOptions opts;
  opts.window = 2;
  opts.epochs = 20;
  opts.seed = 7;
  pretrain_skipgram(corpus, table, opts);
  const double together = oracle::cosine(row_of(table, 2), row_of(table, 3));
  const double apart = oracle::cosine(row_of(table, 4), row_of(table, 5));
  EXPECT_GT(together, apart);
}

TEST(SkipGram, ZeroEpochsIsNoOp) {
  auto corpus = planted_corpus();
  auto table = WordTable::random(30, 8, 6);
  auto before = table.matrix().values();
  std::vector<double> copy(before.begin(), before.end());
  SkipGramOptions opts;
  opts.epochs = 0;
  auto report = pretrain_skipgram(corpus, table, opts);
  EXPECT_TRUE(report.epoch_loss.empty());
  auto after = table.matrix().values();
  EXPECT_TRUE(std::equal(after.begin(), after.end(), copy.begin()));
}

TEST(SkipGram, SeededRunsAreBitIdentical) {
  auto corpus = planted_corpus();
  auto a = WordTable::random(30, 8, 6), b = WordTable::random(30, 8, 6);
  SkipGramOptions opts;
  opts.epochs = 3;
  opts.seed = 99;
  pretrain_skipgram(corpus, a, opts);
  pretrain_skipgram(corpus, b, opts);
  for (std::size_t r = 0; r < 30; ++r) EXPECT_EQ(row_of(a, r), row_of(b, r));
}

TEST(SkipGram, PadRowUntouchedAndLossDecreases) {
  auto corpus = planted_corpus();
  for (auto& s : corpus) s.push_back(Vocabulary::kPad);
  auto table = WordTable::random(30, 16, 8);
  SkipGramOptions opts;
  opts.window = 2;
  opts.epochs = 5;
  auto report = pretrain_skipgram(corpus, table, opts);
  for (double v : table.row(Vocabulary::kPad)) EXPECT_EQ(v, 0.0);
  ASSERT_EQ(report.epoch_loss.size(), 5u);
  EXPECT_LT(report.epoch_loss.back(), report.epoch_loss.front());
}

TEST(SkipGram, Errors) {
  auto table = WordTable::random(30, 4, 8);
  std::vector<std::vector<std::size_t>> empty;
  EXPECT_THROW(pretrain_skipgram(empty, table, {}), IngestionError);
  auto corpus = planted_corpus();
  SkipGramOptions bad;
  bad.window = 0;
  EXPECT_THROW(pretrain_skipgram(corpus, table, bad), ArgumentError);
  bad.window = 2;
  bad.negatives = 0;
  EXPECT_THROW(pretrain_skipgram(corpus, table, bad), ArgumentError);
}
