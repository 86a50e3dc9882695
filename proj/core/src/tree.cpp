#include "recipetree/tree.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

#include "recipetree/errors.hpp"

namespace recipetree {

BinaryCompositionTree BinaryCompositionTree::from_merge_positions(std::vector<std::string> leaves,
                                                                  std::span<const std::size_t> positions) {
  if (leaves.empty()) throw ArgumentError("composition tree needs at least one leaf");
  if (positions.size() + 1 != leaves.size()) {
    throw ValidationError("composition tree over " + std::to_string(leaves.size()) + " leaves needs " +
                          std::to_string(leaves.size() - 1) + " merges, got " + std::to_string(positions.size()));
  }
  std::vector<TreeChild> frontier;
  for (std::size_t i = 0; i < leaves.size(); ++i) frontier.push_back({true, i});
  std::vector<TreeMerge> merges;
  for (std::size_t step = 0; step < positions.size(); ++step) {
    const std::size_t p = positions[step];
    if (p + 1 >= frontier.size()) throw ValidationError("merge position out of range at step " + std::to_string(step + 1));
    merges.push_back({step + 1, frontier[p], frontier[p + 1]});
    frontier[p] = {false, step};
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(p) + 1);
  }
  BinaryCompositionTree t;
  t.leaves_ = std::move(leaves);
  t.merges_ = std::move(merges);
  return t;
}

BinaryCompositionTree BinaryCompositionTree::from_merges(std::vector<std::string> leaves,
                                                         std::vector<TreeMerge> merges) {
  BinaryCompositionTree t;
  t.leaves_ = std::move(leaves);
  std::sort(merges.begin(), merges.end(), [](const TreeMerge& a, const TreeMerge& b) { return a.order < b.order; });
  t.merges_ = std::move(merges);
  t.validate();
  return t;
}

TreeChild BinaryCompositionTree::root() const {
  if (leaves_.empty()) throw ValidationError("empty composition tree has no root");
  if (merges_.empty()) return {true, 0};
  return {false, merges_.size() - 1};
}

void BinaryCompositionTree::validate() const {
  const std::size_t n = leaves_.size();
  if (n == 0) throw ValidationError("composition tree has no leaves");
  if (merges_.size() != n - 1) {
    throw ValidationError("composition tree with " + std::to_string(n) + " leaves has " +
                          std::to_string(merges_.size()) + " internal nodes, expected " + std::to_string(n - 1));
  }
  std::vector<int> leaf_seen(n, 0), internal_seen(merges_.size(), 0);
  for (std::size_t k = 0; k < merges_.size(); ++k) {
    const TreeMerge& m = merges_[k];
    if (m.order != k + 1) throw ValidationError("merge orders must be a permutation of 1..n-1");
    for (const TreeChild& c : {m.left, m.right}) {
      if (c.leaf) {
        if (c.index >= n) throw ValidationError("merge references a missing leaf");
        ++leaf_seen[c.index];
      } else {
        if (c.index >= k) throw ValidationError("parent merge order must exceed its children's");
        ++internal_seen[c.index];
      }
    }
  }
  if (std::any_of(leaf_seen.begin(), leaf_seen.end(), [](int v) { return v != 1; }) && n > 1) {
    throw ValidationError("every leaf must have exactly one parent");
  }
  for (std::size_t k = 0; k + 1 < merges_.size(); ++k) {
    if (internal_seen[k] != 1) throw ValidationError("every non-root internal node must have exactly one parent");
  }
  if (in_order_leaves() != leaves_) throw ValidationError("in-order traversal does not reproduce the leaf order");
  // Leaves under each internal node must be a contiguous, ordered span.
  std::vector<std::pair<std::size_t, std::size_t>> span(merges_.size());
  auto range = [&](const TreeChild& c) {
    return c.leaf ? std::pair{c.index, c.index} : span[c.index];
  };
  for (std::size_t k = 0; k < merges_.size(); ++k) {
    const auto l = range(merges_[k].left);
    const auto r = range(merges_[k].right);
    if (l.second + 1 != r.first) throw ValidationError("merged children are not adjacent");
    span[k] = {l.first, r.second};
  }
}

std::vector<std::string> BinaryCompositionTree::in_order_leaves() const {
  std::vector<std::string> out;
  if (leaves_.empty()) return out;
  std::vector<TreeChild> stack{root()};
  while (!stack.empty()) {
    const TreeChild c = stack.back();
    stack.pop_back();
    if (c.leaf) {
      out.push_back(leaves_.at(c.index));
    } else {
      stack.push_back(merges_.at(c.index).right);
      stack.push_back(merges_.at(c.index).left);
    }
  }
  return out;
}

std::vector<std::size_t> BinaryCompositionTree::merge_positions() const {
  std::vector<TreeChild> frontier;
  for (std::size_t i = 0; i < leaves_.size(); ++i) frontier.push_back({true, i});
  std::vector<std::size_t> positions;
  for (std::size_t k = 0; k < merges_.size(); ++k) {
    auto it = std::find(frontier.begin(), frontier.end(), merges_[k].left);
    if (it == frontier.end() || it + 1 == frontier.end() || *(it + 1) != merges_[k].right) {
      throw ValidationError("merge sequence is not realisable by adjacent frontier merges");
    }
    const auto p = static_cast<std::size_t>(it - frontier.begin());
    positions.push_back(p);
    frontier[p] = {false, k};
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(p) + 1);
  }
  return positions;
}

std::vector<std::size_t> BinaryCompositionTree::leaf_depths() const {
  std::vector<std::size_t> depth(leaves_.size(), 0);
  if (merges_.empty()) return depth;
  std::vector<std::pair<TreeChild, std::size_t>> stack{{root(), 0}};
  while (!stack.empty()) {
    auto [c, d] = stack.back();
    stack.pop_back();
    if (c.leaf) {
      depth.at(c.index) = d;
    } else {
      stack.push_back({merges_.at(c.index).left, d + 1});
      stack.push_back({merges_.at(c.index).right, d + 1});
    }
  }
  return depth;
}

std::vector<std::size_t> BinaryCompositionTree::leaf_parent_orders() const {
  std::vector<std::size_t> parent(leaves_.size(), 0);
  for (const TreeMerge& m : merges_) {
    if (m.left.leaf) parent.at(m.left.index) = m.order;
    if (m.right.leaf) parent.at(m.right.index) = m.order;
  }
  return parent;
}

// ---------------------------------------------------------------------------
// S-expression notation

namespace {

std::string escape_atom(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '(' || c == ')' || c == '\\' || std::isspace(static_cast<unsigned char>(c))) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

class SexprParser {
 public:
  explicit SexprParser(std::string_view text) : text_(text) {}

  BinaryCompositionTree parse() {
    skip_ws();
    if (done()) throw ValidationError("tree notation: empty input");
    const TreeChild root = node();
    skip_ws();
    if (!done()) throw ValidationError("tree notation: trailing characters at offset " + std::to_string(pos_));
    (void)root;
    return BinaryCompositionTree::from_merges(std::move(leaves_), std::move(merges_));
  }

 private:
  bool done() const { return pos_ >= text_.size(); }
  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("tree notation: " + what + " at offset " + std::to_string(pos_));
  }

  TreeChild node() {
    skip_ws();
    if (done()) fail("unexpected end");
    if (text_[pos_] == '(') {
      ++pos_;
      skip_ws();
      const std::size_t order = label();
      TreeChild left = node();
      TreeChild right = node();
      skip_ws();
      if (done() || text_[pos_] != ')') fail("expected ')'");
      ++pos_;
      merges_.push_back({order, left, right});
      // Children are referenced by merge order until from_merges sorts them.
      return remap(order);
    }
    if (text_[pos_] == ')') fail("unexpected ')'");
    std::string atom;
    while (!done()) {
      char c = text_[pos_];
      if (c == '\\' && pos_ + 1 < text_.size()) {
        atom.push_back(text_[pos_ + 1]);
        pos_ += 2;
        continue;
      }
      if (c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c))) break;
      atom.push_back(c);
      ++pos_;
    }
    leaves_.push_back(atom);
    return {true, leaves_.size() - 1};
  }

  std::size_t label() {
    // (-k-)
    if (text_.substr(pos_, 2) != "(-") fail("expected merge label '(-k-)'");
    pos_ += 2;
    std::size_t value = 0;
    std::size_t digits = 0;
    while (!done() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
      ++pos_;
      ++digits;
    }
    if (digits == 0 || text_.substr(pos_, 2) != "-)") fail("malformed merge label");
    pos_ += 2;
    if (value == 0) fail("merge labels start at 1");
    return value;
  }

  TreeChild remap(std::size_t order) { return {false, order - 1}; }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::string> leaves_;
  std::vector<TreeMerge> merges_;
};

}  // namespace

BinaryCompositionTree BinaryCompositionTree::parse_sexpr(std::string_view text) { return SexprParser(text).parse(); }

std::string BinaryCompositionTree::to_sexpr() const {
  std::ostringstream out;
  std::function<void(const TreeChild&)> emit = [&](const TreeChild& c) {
    if (c.leaf) {
      out << escape_atom(leaves_.at(c.index));
      return;
    }
    const TreeMerge& m = merges_.at(c.index);
    out << "((-" << m.order << "-) ";
    emit(m.left);
    out << ' ';
    emit(m.right);
    out << ')';
  };
  emit(root());
  return out.str();
}

}  // namespace recipetree
