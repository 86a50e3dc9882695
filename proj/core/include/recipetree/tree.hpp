#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recipetree {

/// Reference to a node of a BinaryCompositionTree: a leaf (by list position) or
/// an internal node (by merge step, 0-based).
struct TreeChild {
  bool leaf = true;
  std::size_t index = 0;

  bool operator==(const TreeChild&) const = default;
};

struct TreeMerge {
  /// 1-based merge step; a parent always carries a larger order than its
  /// internal children.
  std::size_t order = 0;
  TreeChild left;
  TreeChild right;
};

/// Optional per-node encoder states captured during encoding.
struct TreeNodeState {
  std::vector<double> h;
  std::vector<double> c;
};

/// Binary tree realised by bottom-up merging of adjacent frontier nodes. Leaves
/// keep the input order; internal node k (0-based) is the (k+1)-th merge.
class BinaryCompositionTree {
 public:
  BinaryCompositionTree() = default;

  /// Builds the tree from the frontier position chosen at each merge step
  /// (position p merges frontier entries p and p+1).
  static BinaryCompositionTree from_merge_positions(std::vector<std::string> leaves,
                                                    std::span<const std::size_t> positions);
  /// Builds from explicit merges in step order. Validates every invariant.
  static BinaryCompositionTree from_merges(std::vector<std::string> leaves, std::vector<TreeMerge> merges);

  /// Parses the `((-k-) left right)` notation produced by to_sexpr().
  static BinaryCompositionTree parse_sexpr(std::string_view text);
  std::string to_sexpr() const;

  std::size_t leaf_count() const { return leaves_.size(); }
  std::size_t internal_count() const { return merges_.size(); }
  const std::vector<std::string>& leaves() const { return leaves_; }
  std::vector<std::string>& mutable_leaves() { return leaves_; }
  const std::vector<TreeMerge>& merges() const { return merges_; }
  TreeChild root() const;

  /// Frontier position chosen at each step; inverse of from_merge_positions.
  std::vector<std::size_t> merge_positions() const;

  /// Edge count from the root to each leaf, in leaf order.
  std::vector<std::size_t> leaf_depths() const;
  /// Merge order of each leaf's parent (0 for a single-leaf tree).
  std::vector<std::size_t> leaf_parent_orders() const;

  /// Leaves in left-to-right traversal order (equals leaves() for a valid tree).
  std::vector<std::string> in_order_leaves() const;

  /// Throws ValidationError describing the first violated invariant.
  void validate() const;

  std::vector<TreeNodeState> leaf_states;
  std::vector<TreeNodeState> internal_states;

 private:
  std::vector<std::string> leaves_;
  std::vector<TreeMerge> merges_;
};

}  // namespace recipetree
