#include "recipetree/text_prep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "recipetree/errors.hpp"

namespace recipetree {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }
bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

std::string join(std::span<const std::string> words, char sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(sep);
    out += words[i];
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Raw split without phrase joining or mapping.
std::vector<std::string> raw_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      flush();
      continue;
    }
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
      continue;
    }
    const bool has_prev = !cur.empty();
    const bool has_next = i + 1 < text.size() && is_word_byte(static_cast<unsigned char>(text[i + 1]));
    if (has_prev && has_next) {
      const auto prev = static_cast<unsigned char>(cur.back());
      const auto next = static_cast<unsigned char>(text[i + 1]);
      const bool connector = c == '-' || c == '/' || c == '\'';
      const bool numeric = (c == '.' || c == ',') && is_digit(prev) && is_digit(next);
      if (connector || numeric) {
        cur.push_back(static_cast<char>(c));
        continue;
      }
    }
    flush();
    out.emplace_back(1, static_cast<char>(c));
  }
  flush();
  return out;
}

std::size_t word_count(const std::string& token) { return split(token, '_').size(); }

// Preferred canonical among two tokens: fewer words, then shorter, then lexicographic.
bool preferred(const std::string& a, const std::string& b) {
  const auto wa = word_count(a), wb = word_count(b);
  if (wa != wb) return wa < wb;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

// ---------------------------------------------------------------------------
// CanonicalMap

void CanonicalMap::register_phrase(const std::string& underscored) {
  const std::size_t n = word_count(underscored);
  if (n < 2) return;
  phrases_[underscored] = n;
  longest_phrase_ = std::max(longest_phrase_, n);
}

void CanonicalMap::add(const std::string& source, const std::string& canonical) {
  if (source.empty() || canonical.empty()) throw ArgumentError("canonical map: empty token");
  if (source != canonical) mapping_[source] = canonical;
  register_phrase(source);
  register_phrase(canonical);
}

void CanonicalMap::add_phrase(const std::string& underscored) { register_phrase(underscored); }

const std::string& CanonicalMap::apply(const std::string& token) const {
  auto it = mapping_.find(token);
  return it == mapping_.end() ? token : it->second;
}

std::vector<std::string> CanonicalMap::join_phrases(std::span<const std::string> words) const {
  if (phrases_.empty()) return {words.begin(), words.end()};
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < words.size()) {
    std::size_t matched = 1;
    for (std::size_t len = std::min(longest_phrase_, words.size() - i); len >= 2; --len) {
      if (phrases_.count(join(words.subspan(i, len), '_'))) {
        matched = len;
        break;
      }
    }
    out.push_back(matched == 1 ? words[i] : join(words.subspan(i, matched), '_'));
    i += matched;
  }
  return out;
}

void CanonicalMap::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write canonical map: " + path.string());
  for (const auto& [src, dst] : mapping_) out << src << '\t' << dst << '\n';
  for (const auto& [phrase, _] : phrases_) {
    if (!mapping_.count(phrase)) out << phrase << '\t' << phrase << '\n';
  }
}

CanonicalMap CanonicalMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read canonical map: " + path.string());
  CanonicalMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected two tab-separated columns");
    }
    map.add(trim(line.substr(0, tab)), trim(line.substr(tab + 1)));
  }
  return map;
}

// ---------------------------------------------------------------------------
// Tokenization

std::vector<std::string> tokenize(std::string_view text, const CanonicalMap& canon) {
  std::vector<std::string> tokens = canon.join_phrases(raw_tokens(text));
  for (auto& t : tokens) t = canon.apply(t);
  return tokens;
}

std::string ingredient_token(std::string_view text, const CanonicalMap& canon) {
  std::vector<std::string> words;
  for (auto& t : raw_tokens(text)) {
    if (is_word_byte(static_cast<unsigned char>(t.front()))) words.push_back(std::move(t));
  }
  if (words.empty()) return {};
  return canon.apply(join(words, '_'));
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  tokens_ = {std::string(kUnkToken), std::string(kPadToken)};
  counts_ = {0, 0};
  index_ = {{tokens_[0], kUnk}, {tokens_[1], kPad}};
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences, std::size_t min_count) {
  std::map<std::string, std::uint64_t> freq;
  std::size_t total = 0;
  for (const auto& s : sentences) {
    for (const auto& t : s) {
      if (t == kUnkToken || t == kPadToken) continue;
      ++freq[t];
      ++total;
    }
  }
  if (total == 0) throw IngestionError("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  std::uint64_t dropped = 0;
  for (auto& [tok, n] : freq) {
    if (n >= std::max<std::size_t>(min_count, 1)) {
      kept.emplace_back(tok, n);
    } else {
      dropped += n;
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  v.min_count_ = min_count;
  v.counts_[kUnk] = dropped;
  for (auto& [tok, n] : kept) {
    v.index_.emplace(tok, v.tokens_.size());
    v.tokens_.push_back(tok);
    v.counts_.push_back(n);
  }
  return v;
}

std::size_t Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return index_.count(token) > 0; }

const std::string& Vocabulary::token(std::size_t index) const {
  if (index >= tokens_.size()) throw IndexError("vocabulary index out of range: " + std::to_string(index));
  return tokens_[index];
}

std::uint64_t Vocabulary::count(std::size_t index) const {
  if (index >= counts_.size()) throw IndexError("vocabulary index out of range: " + std::to_string(index));
  return counts_[index];
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& t : tokens_) {
    for (char c : t) mix(static_cast<unsigned char>(c));
    mix(0);
  }
  return h;
}

std::string Vocabulary::serialize() const {
  std::ostringstream out;
  out << "recipetree-vocab\t1\t" << min_count_ << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << counts_[i] << '\n';
  return out.str();
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("vocabulary: missing header");
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  std::size_t min_count = 0;
  if (!(header >> magic >> version >> min_count) || magic != "recipetree-vocab" || version != 1) {
    throw ValidationError("vocabulary: bad header");
  }
  Vocabulary v;
  v.tokens_.clear();
  v.counts_.clear();
  v.index_.clear();
  v.min_count_ = min_count;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ValidationError("vocabulary line " + std::to_string(lineno) + ": expected token<TAB>count");
    }
    std::string tok = line.substr(0, tab);
    const std::uint64_t n = std::stoull(line.substr(tab + 1));
    if (!v.index_.emplace(tok, v.tokens_.size()).second) {
      throw ValidationError("vocabulary line " + std::to_string(lineno) + ": duplicate token " + tok);
    }
    v.tokens_.push_back(std::move(tok));
    v.counts_.push_back(n);
  }
  if (v.tokens_.size() < 2 || v.tokens_[kUnk] != kUnkToken || v.tokens_[kPad] != kPadToken) {
    throw ValidationError("vocabulary: reserved tokens must occupy indices 0 and 1");
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary: " + path.string());
  out << serialize();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

// ---------------------------------------------------------------------------
// Merge proposals

std::string_view to_string(MergeKind kind) {
  switch (kind) {
    case MergeKind::kStemPlural:
      return "stem_plural";
    case MergeKind::kEmbeddingProximity:
      return "embedding_proximity";
    case MergeKind::kSharedWords:
      return "shared_words";
    case MergeKind::kMappingFile:
      return "mapping_file";
  }
  return "unknown";
}

std::vector<std::string> singular_forms(const std::string& token) {
  auto words = split(token, '_');
  if (words.empty()) return {};
  const std::string last = words.back();
  std::vector<std::string> stems;
  auto ends_with = [&](std::string_view suffix) {
    return last.size() > suffix.size() + 1 && last.compare(last.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("ies")) stems.push_back(last.substr(0, last.size() - 3) + "y");
  if (ends_with("es")) stems.push_back(last.substr(0, last.size() - 2));
  if (ends_with("s") && !ends_with("ss")) stems.push_back(last.substr(0, last.size() - 1));

  std::vector<std::string> out;
  for (const auto& s : stems) {
    words.back() = s;
    out.push_back(join(words, '_'));
  }
  return out;
}

std::vector<MergeRule> propose_merges(std::span<const std::string> ingredients, const TokenSimilarity& similarity,
                                      const MergeProposalOptions& options) {
  const std::set<std::string> unique(ingredients.begin(), ingredients.end());
  const std::vector<std::string> items(unique.begin(), unique.end());

  std::vector<MergeRule> rules;
  std::set<std::pair<std::string, std::string>> seen;
  auto propose = [&](MergeKind kind, const std::string& source, const std::string& canonical) {
    if (source == canonical) return;
    const auto key = std::minmax(source, canonical);
    if (!seen.emplace(key.first, key.second).second) return;
    rules.push_back({kind, source, canonical, MergeStatus::kProposed});
  };

  for (const auto& token : items) {
    for (const auto& s : singular_forms(token)) {
      if (unique.count(s)) {
        propose(MergeKind::kStemPlural, token, s);
        break;
      }
    }
  }

  if (similarity) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        const auto sim = similarity(items[i], items[j]);
        if (!sim || *sim < options.proximity_threshold) continue;
        const bool keep_i = preferred(items[i], items[j]);
        propose(MergeKind::kEmbeddingProximity, keep_i ? items[j] : items[i], keep_i ? items[i] : items[j]);
      }
    }
  }

  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto wi = split(items[i], '_');
    const std::set<std::string> si(wi.begin(), wi.end());
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const auto wj = split(items[j], '_');
      std::size_t shared = 0;
      for (const auto& w : std::set<std::string>(wj.begin(), wj.end())) shared += si.count(w);
      if (shared < 2) continue;
      const bool keep_i = preferred(items[i], items[j]);
      propose(MergeKind::kSharedWords, keep_i ? items[j] : items[i], keep_i ? items[i] : items[j]);
    }
  }

  if (options.mapping_file) {
    std::ifstream in(*options.mapping_file);
    if (!in) throw IoError("cannot read mapping file: " + options.mapping_file->string());
    std::string line;
    while (std::getline(in, line)) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos || line[0] == '#') continue;
      const std::string src = trim(line.substr(0, tab));
      const std::string dst = trim(line.substr(tab + 1));
      if (unique.count(src) && !dst.empty()) propose(MergeKind::kMappingFile, src, dst);
    }
  }
  return rules;
}

std::vector<ReviewEntry> parse_review_ledger(std::string_view text) {
  std::vector<ReviewEntry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string verb, source, arrow, canonical, extra;
    if (!(fields >> verb >> source >> arrow >> canonical) || arrow != "->" || (fields >> extra)) {
      throw ValidationError("review ledger line " + std::to_string(lineno) +
                            ": expected `accept|reject <source> -> <canonical>`");
    }
    if (verb != "accept" && verb != "reject") {
      throw ValidationError("review ledger line " + std::to_string(lineno) + ": unknown decision '" + verb + "'");
    }
    entries.push_back({verb == "accept", source, canonical});
  }
  return entries;
}

std::vector<ReviewEntry> load_review_ledger(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read review ledger: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_review_ledger(buf.str());
}

std::string format_proposals(std::span<const MergeRule> rules) {
  std::ostringstream out;
  for (const auto& r : rules) {
    out << "propose " << r.source << " -> " << r.canonical << "  # " << to_string(r.kind) << '\n';
  }
  return out.str();
}

CanonicalMap apply_review(std::vector<MergeRule>& rules, std::span<const ReviewEntry> ledger) {
  for (const auto& entry : ledger) {
    auto it = std::find_if(rules.begin(), rules.end(), [&](const MergeRule& r) {
      return r.source == entry.source && r.canonical == entry.canonical;
    });
    if (it == rules.end()) {
      throw ValidationError("review ledger references unknown rule " + entry.source + " -> " + entry.canonical);
    }
    it->status = entry.accept ? MergeStatus::kAccepted : MergeStatus::kRejected;
  }

  std::map<std::string, std::string> edges;
  for (const auto& r : rules) {
    if (r.status != MergeStatus::kAccepted) continue;
    auto [it, inserted] = edges.emplace(r.source, r.canonical);
    if (!inserted && it->second != r.canonical) {
      throw ValidationError("conflicting accepted merges for " + r.source + ": " + it->second + " and " +
                            r.canonical);
    }
  }

  CanonicalMap map;
  for (const auto& [source, first] : edges) {
    std::string target = first;
    std::set<std::string> visited{source};
    while (true) {
      if (!visited.insert(target).second) {
        throw ValidationError("accepted merges form a cycle through " + source);
      }
      auto next = edges.find(target);
      if (next == edges.end()) break;
      target = next->second;
    }
    map.add(source, target);
  }
  return map;
}

}  // namespace recipetree
