#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "recipetree/recipe.hpp"
#include "recipetree/text_prep.hpp"

namespace recipetree {

/// Validated recipe records, in file order.
struct Dataset {
  std::vector<RecipeRecord> records;

  std::size_t size() const { return records.size(); }
  std::size_t count(Split split) const;
  const RecipeRecord* find(const std::string& id) const;
};

/// Parses JSONL. Records without a split are assigned train/val/test in 70/15/15
/// proportions by ranking a seeded hash of their id.
Dataset ingest(const std::filesystem::path& path, std::uint64_t split_seed = 0);
Dataset parse_jsonl(std::istream& in, std::uint64_t split_seed = 0, const std::string& source = "<stream>");

/// Throws ValidationError naming the offending field.
void validate_record(const RecipeRecord& record);

void assign_splits(std::vector<RecipeRecord>& records, std::uint64_t seed);

std::string to_json_line(const RecipeRecord& record);
void write_jsonl(const std::filesystem::path& path, std::span<const RecipeRecord> records);

/// Registers every multiword ingredient (after canonical mapping) as a phrase so
/// instruction text mentioning it tokenises to the same single token.
void register_ingredient_phrases(CanonicalMap& canon, std::span<const RecipeRecord> records);

std::vector<TokenRecipe> tokenize_dataset(const Dataset& dataset, const CanonicalMap& canon);
std::vector<TokenRecipe> select_split(std::span<const TokenRecipe> recipes, Split split);

/// Image feature vectors keyed by image id, kept in insertion order.
class FeatureStore {
 public:
  void add(const std::string& id, std::vector<double> values);
  const std::vector<double>* find(const std::string& id) const;
  std::size_t size() const { return ids_.size(); }
  /// Dimension shared by every vector (0 when empty).
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }

  /// Magic "RTIF", version byte, then (id, dim u32, f64 values) records to EOF.
  void save(const std::filesystem::path& path) const;
  static FeatureStore load(const std::filesystem::path& path);

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<double>> values_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t dim_ = 0;
};

}  // namespace recipetree
