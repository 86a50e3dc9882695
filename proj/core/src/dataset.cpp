#include "recipetree/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "recipetree/binary_io.hpp"
#include "recipetree/errors.hpp"

namespace recipetree {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val" || text == "validation") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw ValidationError("unknown split '" + std::string(text) + "'");
}

TokenRecipe tokenize_recipe(const RecipeRecord& record, const CanonicalMap& canon) {
  TokenRecipe out;
  out.id = record.id;
  out.title = tokenize(record.title, canon);
  for (const auto& line : record.ingredients) {
    std::string token = ingredient_token(line, canon);
    if (token.empty()) throw ValidationError("recipe " + record.id + ": ingredient '" + line + "' has no words");
    out.ingredients.push_back(std::move(token));
  }
  for (const auto& sentence : record.instructions) {
    auto tokens = tokenize(sentence, canon);
    if (!tokens.empty()) out.instructions.push_back(std::move(tokens));
  }
  out.image_ids = record.image_ids;
  out.ingredient_weights = record.ingredient_weights;
  out.split = record.split.value_or(Split::kTrain);
  return out;
}

std::vector<std::vector<std::string>> token_sequences(const TokenRecipe& recipe) {
  std::vector<std::vector<std::string>> out;
  out.push_back(recipe.title);
  out.push_back(recipe.ingredients);
  out.insert(out.end(), recipe.instructions.begin(), recipe.instructions.end());
  return out;
}

// ---------------------------------------------------------------------------

std::size_t Dataset::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const RecipeRecord& r) { return r.split == split; }));
}

const RecipeRecord* Dataset::find(const std::string& id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

void validate_record(const RecipeRecord& r) {
  auto fail = [&](const std::string& field, const std::string& what) {
    throw ValidationError("recipe '" + r.id + "': field '" + field + "' " + what);
  };
  if (r.id.empty()) throw ValidationError("recipe record: field 'id' is empty");
  if (r.title.empty()) fail("title", "is empty");
  if (r.ingredients.empty()) fail("ingredients", "is empty");
  if (r.instructions.empty()) fail("instructions", "is empty");
  for (const auto& s : r.ingredients) {
    if (s.empty()) fail("ingredients", "contains an empty entry");
  }
  for (const auto& s : r.instructions) {
    if (s.empty()) fail("instructions", "contains an empty sentence");
  }
  if (r.ingredient_weights) {
    const auto& w = *r.ingredient_weights;
    if (w.size() != r.ingredients.size()) fail("ingredient_weights", "does not align with ingredients");
    for (double v : w) {
      if (!std::isfinite(v) || v < 0.0) fail("ingredient_weights", "contains a negative or non-finite weight");
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (std::abs(total - 1000.0) > 0.5) fail("ingredient_weights", "must sum to 1000 g (got " + std::to_string(total) + ")");
  }
}

namespace {

std::uint64_t split_hash(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](unsigned char b) {
    h ^= b;
    h *= 1099511628211ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : id) mix(static_cast<unsigned char>(c));
  return h;
}

std::vector<std::string> string_list(const json& obj, const char* key, std::size_t line, bool required) {
  std::vector<std::string> out;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) throw ValidationError("line " + std::to_string(line) + ": missing field '" + key + "'");
    return out;
  }
  if (!it->is_array()) throw ValidationError("line " + std::to_string(line) + ": field '" + key + "' must be a list");
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw ValidationError("line " + std::to_string(line) + ": field '" + key + "' must contain strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

RecipeRecord record_from_json(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw IngestionError("line " + std::to_string(line) + ": expected a JSON object");
  auto text = [&](const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
      throw ValidationError("line " + std::to_string(line) + ": field '" + key + "' must be a string");
    }
    return it->get<std::string>();
  };
  RecipeRecord r;
  r.id = text("id");
  r.title = text("title");
  r.ingredients = string_list(obj, "ingredients", line, true);
  r.instructions = string_list(obj, "instructions", line, true);
  r.image_ids = string_list(obj, "image_ids", line, false);
  if (auto it = obj.find("ingredient_weights"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw ValidationError("line " + std::to_string(line) + ": field 'ingredient_weights' must be a list");
    }
    std::vector<double> w;
    for (const auto& v : *it) {
      if (!v.is_number()) {
        throw ValidationError("line " + std::to_string(line) + ": field 'ingredient_weights' must contain numbers");
      }
      w.push_back(v.get<double>());
    }
    r.ingredient_weights = std::move(w);
  }
  if (auto it = obj.find("split"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("line " + std::to_string(line) + ": field 'split' must be a string");
    try {
      r.split = parse_split(it->get<std::string>());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line) + ": field 'split': " + e.what());
    }
  }
  try {
    validate_record(r);
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line) + ": " + e.what());
  }
  return r;
}

}  // namespace

void assign_splits(std::vector<RecipeRecord>& records, std::uint64_t seed) {
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].split) missing.push_back(i);
  }
  std::sort(missing.begin(), missing.end(), [&](std::size_t a, std::size_t b) {
    const auto ha = split_hash(seed, records[a].id);
    const auto hb = split_hash(seed, records[b].id);
    return ha != hb ? ha < hb : records[a].id < records[b].id;
  });
  const std::size_t n = missing.size();
  const std::size_t train = n * 70 / 100;
  const std::size_t val = n * 15 / 100;
  for (std::size_t k = 0; k < n; ++k) {
    records[missing[k]].split = k < train ? Split::kTrain : (k < train + val ? Split::kVal : Split::kTest);
  }
}

Dataset parse_jsonl(std::istream& in, std::uint64_t split_seed, const std::string& source) {
  Dataset ds;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IngestionError(source + ":" + std::to_string(number) + ": malformed JSON (" + e.what() + ")");
    }
    RecipeRecord r = record_from_json(obj, number);
    if (auto [it, fresh] = seen.emplace(r.id, number); !fresh) {
      throw ValidationError(source + ":" + std::to_string(number) + ": duplicate id '" + r.id + "' (first on line " +
                            std::to_string(it->second) + ")");
    }
    ds.records.push_back(std::move(r));
  }
  if (ds.records.empty()) throw IngestionError(source + ": no recipe records");
  assign_splits(ds.records, split_seed);
  return ds;
}

Dataset ingest(const std::filesystem::path& path, std::uint64_t split_seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open recipe file " + path.string());
  return parse_jsonl(in, split_seed, path.string());
}

std::string to_json_line(const RecipeRecord& r) {
  json obj = json::object();
  obj["id"] = r.id;
  obj["title"] = r.title;
  obj["ingredients"] = r.ingredients;
  obj["instructions"] = r.instructions;
  obj["image_ids"] = r.image_ids;
  if (r.ingredient_weights) obj["ingredient_weights"] = *r.ingredient_weights;
  if (r.split) obj["split"] = std::string(to_string(*r.split));
  return obj.dump();
}

void write_jsonl(const std::filesystem::path& path, std::span<const RecipeRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << to_json_line(r) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void register_ingredient_phrases(CanonicalMap& canon, std::span<const RecipeRecord> records) {
  const CanonicalMap plain;
  for (const auto& r : records) {
    for (const auto& line : r.ingredients) {
      const std::string raw = ingredient_token(line, plain);
      if (raw.find('_') != std::string::npos) canon.add_phrase(raw);
      const std::string& mapped = canon.apply(raw);
      if (mapped.find('_') != std::string::npos) canon.add_phrase(mapped);
    }
  }
}

std::vector<TokenRecipe> tokenize_dataset(const Dataset& dataset, const CanonicalMap& canon) {
  std::vector<TokenRecipe> out;
  out.reserve(dataset.size());
  for (const auto& r : dataset.records) out.push_back(tokenize_recipe(r, canon));
  return out;
}

std::vector<TokenRecipe> select_split(std::span<const TokenRecipe> recipes, Split split) {
  std::vector<TokenRecipe> out;
  for (const auto& r : recipes) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

void FeatureStore::add(const std::string& id, std::vector<double> values) {
  if (values.empty()) throw ValidationError("image feature '" + id + "' is empty");
  if (dim_ != 0 && values.size() != dim_) {
    throw DimensionError("image feature '" + id + "' has dimension " + std::to_string(values.size()) +
                         ", expected " + std::to_string(dim_));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("image feature '" + id + "' has a non-finite value");
  }
  if (index_.count(id)) throw ValidationError("duplicate image feature id '" + id + "'");
  dim_ = values.size();
  index_.emplace(id, ids_.size());
  ids_.push_back(id);
  values_.push_back(std::move(values));
}

const std::vector<double>* FeatureStore::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &values_[it->second];
}

void FeatureStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  binary::write_magic(out, "RTIF");
  binary::write_u8(out, 1);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    binary::write_string(out, ids_[i]);
    binary::write_u32(out, static_cast<std::uint32_t>(values_[i].size()));
    binary::write_f64s(out, values_[i]);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

FeatureStore FeatureStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file " + path.string());
  binary::expect_magic(in, "RTIF", "image feature file");
  const auto version = binary::read_u8(in);
  if (version != 1) throw ValidationError("unsupported feature file version " + std::to_string(version));
  FeatureStore store;
  while (!binary::at_end(in)) {
    std::string id = binary::read_string(in);
    const std::uint32_t dim = binary::read_u32(in);
    store.add(id, binary::read_f64s(in, dim));
  }
  return store;
}

}  // namespace recipetree
