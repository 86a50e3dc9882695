#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace recipetree {

/// Joins known multiword phrases into single underscore tokens and maps tokens to
/// their canonical form. An empty map only lowercases and splits.
class CanonicalMap {
 public:
  CanonicalMap() = default;

  /// Adds `source -> canonical`; both may contain underscores (multiword).
  void add(const std::string& source, const std::string& canonical);
  /// Registers a multiword phrase (underscore form) for joining without remapping it.
  void add_phrase(const std::string& underscored);

  /// Canonical form of a single token (identity when unmapped).
  const std::string& apply(const std::string& token) const;
  bool empty() const { return mapping_.empty() && phrases_.empty(); }
  const std::map<std::string, std::string>& mapping() const { return mapping_; }

  /// Greedy longest-match joining of words into registered phrases.
  std::vector<std::string> join_phrases(std::span<const std::string> words) const;

  /// Two-column TSV `source<TAB>canonical`.
  void save(const std::filesystem::path& path) const;
  static CanonicalMap load(const std::filesystem::path& path);

 private:
  void register_phrase(const std::string& underscored);

  std::map<std::string, std::string> mapping_;
  std::map<std::string, std::size_t> phrases_;  // underscored phrase -> word count
  std::size_t longest_phrase_ = 1;
};

/// Lowercased, punctuation-separated tokens. Punctuation marks become their own
/// tokens; '-' and '/' between alphanumerics and '.' between digits stay inside a
/// word ("stir-fry", "1-1/2", "2.5"). Multiword phrases known to `canon` are joined
/// with underscores and every token is mapped through `canon`.
std::vector<std::string> tokenize(std::string_view text, const CanonicalMap& canon = {});

/// An ingredient line reduced to one canonical token: punctuation stripped,
/// words joined with '_', then mapped through `canon`. Empty if no words remain.
std::string ingredient_token(std::string_view text, const CanonicalMap& canon = {});

class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kPad = 1;
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::size_t kDefaultMinCount = 10;

  Vocabulary();

  /// Tokens with frequency >= min_count are retained, ordered by descending
  /// frequency then lexicographically. Everything else counts toward UNK.
  static Vocabulary build(std::span<const std::vector<std::string>> sentences,
                          std::size_t min_count = kDefaultMinCount);

  std::size_t size() const { return tokens_.size(); }
  /// Index of `token`, or kUnk.
  std::size_t index(const std::string& token) const;
  bool contains(const std::string& token) const;
  const std::string& token(std::size_t index) const;
  std::uint64_t count(std::size_t index) const;
  std::size_t min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<std::size_t> encode(std::span<const std::string> tokens) const;

  /// FNV-1a over the ordered token list; used to bind tables and checkpoints.
  std::uint64_t hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);
  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && counts_ == other.counts_ && min_count_ == other.min_count_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t min_count_ = kDefaultMinCount;
};

enum class MergeKind { kStemPlural, kEmbeddingProximity, kSharedWords, kMappingFile };
enum class MergeStatus { kProposed, kAccepted, kRejected };

std::string_view to_string(MergeKind kind);

struct MergeRule {
  MergeKind kind = MergeKind::kStemPlural;
  std::string source;
  std::string canonical;
  MergeStatus status = MergeStatus::kProposed;

  bool operator==(const MergeRule&) const = default;
};

/// Cosine similarity between two ingredient tokens, or nullopt when either token
/// has no vector (e.g. it maps to UNK).
using TokenSimilarity = std::function<std::optional<double>(const std::string&, const std::string&)>;

struct MergeProposalOptions {
  double proximity_threshold = 0.85;
  std::optional<std::filesystem::path> mapping_file;
};

/// Singular candidates for the last word of an underscore token
/// (-s, -es, -ies -> -y).
std::vector<std::string> singular_forms(const std::string& token);

/// Emits proposed rules from, in order: plural folding, embedding proximity,
/// two-or-more shared words, and a mapping file. Each unordered token pair is
/// proposed at most once; the first kind to propose it wins.
std::vector<MergeRule> propose_merges(std::span<const std::string> ingredients,
                                      const TokenSimilarity& similarity,
                                      const MergeProposalOptions& options = {});

/// A reviewer decision: `accept|reject <source> -> <canonical>`.
struct ReviewEntry {
  bool accept = false;
  std::string source;
  std::string canonical;
};

std::vector<ReviewEntry> parse_review_ledger(std::string_view text);
std::vector<ReviewEntry> load_review_ledger(const std::filesystem::path& path);

/// Writes proposals in ledger syntax with a `propose` verb and the rule kind as a
/// trailing comment, ready to be edited into a review file.
std::string format_proposals(std::span<const MergeRule> rules);

/// Applies reviewer decisions. Accepted rules are composed into a transitively
/// closed, idempotent map; rejected and unreviewed rules are dropped. Statuses on
/// `rules` are updated in place.
CanonicalMap apply_review(std::vector<MergeRule>& rules, std::span<const ReviewEntry> ledger);

}  // namespace recipetree
