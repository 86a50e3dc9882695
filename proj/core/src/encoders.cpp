#include "recipetree/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "recipetree/embeddings.hpp"
#include "recipetree/errors.hpp"

namespace recipetree {

// ---------------------------------------------------------------------------
// Configuration

std::string EncoderKinds::name() const {
  return std::string{static_cast<char>(ingredient), '+', static_cast<char>(sentence), '+',
                     static_cast<char>(instruction)};
}

EncoderKinds EncoderKinds::parse(std::string_view text) {
  auto kind = [&](char c) {
    switch (c) {
      case 'S':
        return SectionKind::kSet;
      case 'G':
        return SectionKind::kGru;
      case 'L':
        return SectionKind::kLstm;
      case 'T':
        return SectionKind::kTree;
      default:
        throw ConfigError("unknown encoder code '" + std::string(1, c) + "' in '" + std::string(text) + "'");
    }
  };
  std::string s(text);
  s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '[' || c == ']' || c == ' '; }), s.end());
  if (s.size() != 5 || s[1] != '+' || s[3] != '+') {
    throw ConfigError("encoder tuple must look like T+L+L, got '" + std::string(text) + "'");
  }
  EncoderKinds k{kind(s[0]), kind(s[2]), kind(s[4])};
  if (k.ingredient == SectionKind::kLstm) throw ConfigError("ingredient encoder must be S, G or T");
  auto chain_or_tree = [](SectionKind x) { return x == SectionKind::kLstm || x == SectionKind::kTree; };
  if (!chain_or_tree(k.sentence) || !chain_or_tree(k.instruction)) {
    throw ConfigError("sentence and instruction encoders must be L or T");
  }
  return k;
}

void ModelConfig::validate() const {
  EncoderKinds::parse(kinds.name());
  if (word_dim == 0 || section_dim == 0 || latent_dim == 0 || image_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (section_dim % 2 != 0) throw ConfigError("section dimension must be even (two recurrent directions)");
  if (!(temperature > 0.0)) throw ConfigError("Gumbel temperature must be positive");
}

// ---------------------------------------------------------------------------
// Layers and cells

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                      std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(in * out);
  for (double& v : w) v = dist(rng);
  Linear l;
  l.weight = &store.add(name + ".weight", Tensor::matrix(out, in, std::move(w), true));
  l.bias = &store.add(name + ".bias", Tensor::zeros({out}, true));
  return l;
}

Var Linear::apply(Graph& g, Var x) const { return g.affine(x, g.param(*weight), g.param(*bias)); }

LstmCell::LstmCell(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                   std::mt19937_64& rng)
    : gates_(Linear::create(store, name + ".gates", input + hidden, 4 * hidden, rng)), hidden_(hidden) {}

CellState LstmCell::initial(Graph& g) const {
  return {g.constant(std::vector<double>(hidden_, 0.0)), g.constant(std::vector<double>(hidden_, 0.0))};
}

CellState LstmCell::step(Graph& g, Var x, CellState prev) const {
  const std::size_t H = hidden_;
  const Var z = gates_.apply(g, g.concat({x, prev.h}));
  const Var i = g.sigmoid(g.slice(z, 0, H));
  const Var f = g.sigmoid(g.slice(z, H, H));
  const Var o = g.sigmoid(g.slice(z, 2 * H, H));
  const Var u = g.tanh(g.slice(z, 3 * H, H));
  const Var c = g.add(g.mul(f, prev.c), g.mul(i, u));
  const Var h = g.mul(o, g.tanh(c));
  return {h, c};
}

GruCell::GruCell(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                 std::mt19937_64& rng)
    : gates_(Linear::create(store, name + ".gates", input + hidden, 2 * hidden, rng)),
      candidate_(Linear::create(store, name + ".candidate", input + hidden, hidden, rng)),
      hidden_(hidden) {}

Var GruCell::initial(Graph& g) const { return g.constant(std::vector<double>(hidden_, 0.0)); }

Var GruCell::step(Graph& g, Var x, Var h) const {
  const std::size_t H = hidden_;
  const Var zr = g.sigmoid(gates_.apply(g, g.concat({x, h})));
  const Var z = g.slice(zr, 0, H);
  const Var r = g.slice(zr, H, H);
  const Var n = g.tanh(candidate_.apply(g, g.concat({x, g.mul(r, h)})));
  return g.add(n, g.mul(z, g.sub(h, n)));
}

TreeLstmCell::TreeLstmCell(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                           std::mt19937_64& rng)
    : leaf_(Linear::create(store, name + ".leaf", input, 2 * hidden, rng)),
      comp_(Linear::create(store, name + ".comp", 2 * hidden, 5 * hidden, rng)),
      hidden_(hidden) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> q(hidden);
  for (double& v : q) v = dist(rng);
  query_ = &store.add(name + ".query", Tensor::vector(std::move(q), true));
}

CellState TreeLstmCell::leaf(Graph& g, Var x) const {
  const Var hc = leaf_.apply(g, x);
  return {g.slice(hc, 0, hidden_), g.slice(hc, hidden_, hidden_)};
}

CellState TreeLstmCell::compose(Graph& g, CellState left, CellState right) const {
  const std::size_t H = hidden_;
  if (g.size(left.h) != H || g.size(right.h) != H || g.size(left.c) != H || g.size(right.c) != H) {
    throw DimensionError("tree_compose: child states must have dimension " + std::to_string(H));
  }
  const Var z = comp_.apply(g, g.concat({left.h, right.h}));
  const Var i = g.sigmoid(g.slice(z, 0, H));
  const Var fl = g.sigmoid(g.slice(z, H, H));
  const Var fr = g.sigmoid(g.slice(z, 2 * H, H));
  const Var o = g.sigmoid(g.slice(z, 3 * H, H));
  const Var u = g.tanh(g.slice(z, 4 * H, H));
  const Var c = g.add(g.add(g.mul(fl, left.c), g.mul(fr, right.c)), g.mul(i, u));
  const Var h = g.mul(o, g.tanh(c));
  return {h, c};
}

Var TreeLstmCell::score(Graph& g, Var h) const { return g.dot(g.param(*query_), h); }

// ---------------------------------------------------------------------------
// Tree encoding

namespace {

TreeNodeState capture(const Graph& g, CellState s) {
  auto h = g.value(s.h);
  auto c = g.value(s.c);
  return {{h.begin(), h.end()}, {c.begin(), c.end()}};
}

std::vector<std::string> default_labels(std::span<const std::string> labels, std::size_t n) {
  if (labels.size() == n) return {labels.begin(), labels.end()};
  if (!labels.empty()) throw ArgumentError("tree encoder: label count does not match input count");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

}  // namespace

TreeEncoding tree_encode(Graph& g, const TreeLstmCell& cell, std::span<const Var> inputs,
                         std::span<const std::string> labels, const EncodeContext& ctx) {
  if (inputs.empty()) throw ArgumentError("tree_encode: empty token sequence");
  const bool stochastic = ctx.mode != EncodeMode::kInfer;
  if (stochastic && !ctx.rng) throw ArgumentError("tree_encode: training mode needs a random generator");
  const bool hard = ctx.mode == EncodeMode::kTrain && ctx.hard;

  std::vector<CellState> frontier;
  frontier.reserve(inputs.size());
  for (Var x : inputs) frontier.push_back(cell.leaf(g, x));

  TreeEncoding result;
  std::vector<TreeNodeState> leaf_states, internal_states;
  if (ctx.record_states) {
    for (const auto& s : frontier) leaf_states.push_back(capture(g, s));
  }

  std::vector<std::size_t> positions;
  while (frontier.size() > 1) {
    const std::size_t k = frontier.size();
    std::vector<CellState> candidates;
    candidates.reserve(k - 1);
    for (std::size_t j = 0; j + 1 < k; ++j) candidates.push_back(cell.compose(g, frontier[j], frontier[j + 1]));

    std::size_t chosen = 0;
    if (k == 2) {
      frontier = {candidates[0]};
    } else {
      std::vector<Var> scores;
      scores.reserve(k - 1);
      for (const auto& cand : candidates) scores.push_back(cell.score(g, cand.h));
      const Var logits = g.concat(scores);

      if (!stochastic) {
        auto v = g.value(logits);
        chosen = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
        std::vector<CellState> next(frontier.begin(), frontier.begin() + static_cast<std::ptrdiff_t>(chosen));
        next.push_back(candidates[chosen]);
        next.insert(next.end(), frontier.begin() + static_cast<std::ptrdiff_t>(chosen) + 2, frontier.end());
        frontier = std::move(next);
      } else {
        const auto noise = gumbel_noise(*ctx.rng, k - 1);
        const Var selection = g.gumbel_softmax(logits, ctx.temperature, noise, hard);
        auto s = g.value(selection);
        chosen = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
        std::vector<CellState> next;
        next.reserve(k - 1);
        for (std::size_t i = 0; i + 1 < k; ++i) {
          next.push_back({g.frontier_mix(selection, i, frontier[i].h, candidates[i].h, frontier[i + 1].h),
                          g.frontier_mix(selection, i, frontier[i].c, candidates[i].c, frontier[i + 1].c)});
        }
        frontier = std::move(next);
      }
    }
    positions.push_back(chosen);
    if (ctx.record_states) internal_states.push_back(capture(g, frontier[chosen]));
  }

  result.root = frontier.front();
  result.tree = BinaryCompositionTree::from_merge_positions(default_labels(labels, inputs.size()), positions);
  result.tree.leaf_states = std::move(leaf_states);
  result.tree.internal_states = std::move(internal_states);
  return result;
}

TreeEncoding tree_encode_fixed(Graph& g, const TreeLstmCell& cell, std::span<const Var> inputs,
                               std::span<const std::string> labels, const BinaryCompositionTree& shape,
                               const EncodeContext& ctx) {
  if (inputs.empty()) throw ArgumentError("tree_encode: empty token sequence");
  if (shape.leaf_count() != inputs.size()) {
    throw ArgumentError("fixed tree has " + std::to_string(shape.leaf_count()) + " leaves but " +
                        std::to_string(inputs.size()) + " inputs were given");
  }
  std::vector<CellState> leaves;
  for (Var x : inputs) leaves.push_back(cell.leaf(g, x));
  std::vector<CellState> internal;
  auto state = [&](const TreeChild& c) { return c.leaf ? leaves.at(c.index) : internal.at(c.index); };
  for (const TreeMerge& m : shape.merges()) internal.push_back(cell.compose(g, state(m.left), state(m.right)));

  TreeEncoding result;
  result.root = internal.empty() ? leaves.front() : internal.back();
  result.tree = BinaryCompositionTree::from_merge_positions(default_labels(labels, inputs.size()),
                                                            shape.merge_positions());
  if (ctx.record_states) {
    for (const auto& s : leaves) result.tree.leaf_states.push_back(capture(g, s));
    for (const auto& s : internal) result.tree.internal_states.push_back(capture(g, s));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Chain and set encoders

Var bilstm_encode(Graph& g, const LstmCell& forward, const LstmCell& backward, std::span<const Var> inputs) {
  if (inputs.empty()) throw ArgumentError("bilstm_encode: empty sequence");
  CellState fw = forward.initial(g);
  for (Var x : inputs) fw = forward.step(g, x, fw);
  CellState bw = backward.initial(g);
  for (auto it = inputs.rbegin(); it != inputs.rend(); ++it) bw = backward.step(g, *it, bw);
  return g.concat({fw.h, bw.h});
}

Var bigru_encode(Graph& g, const GruCell& forward, const GruCell& backward, std::span<const Var> inputs) {
  if (inputs.empty()) throw ArgumentError("bigru_encode: empty sequence");
  Var fw = forward.initial(g);
  for (Var x : inputs) fw = forward.step(g, x, fw);
  Var bw = backward.initial(g);
  for (auto it = inputs.rbegin(); it != inputs.rend(); ++it) bw = backward.step(g, *it, bw);
  return g.concat({fw, bw});
}

Var set_encode(Graph& g, const Linear& projection, std::span<const Var> inputs) {
  if (inputs.empty()) throw ArgumentError("set_encode: empty ingredient set");
  Var total = projection.apply(g, inputs[0]);
  for (std::size_t i = 1; i < inputs.size(); ++i) total = g.add(total, projection.apply(g, inputs[i]));
  return total;
}

namespace {

class SetSection final : public SectionEncoder {
 public:
  SetSection(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng)
      : projection_(Linear::create(store, name + ".proj", in, out, rng)) {}
  SectionKind kind() const override { return SectionKind::kSet; }
  std::size_t output_dim() const override { return projection_.out_dim(); }
  SectionOutput encode(Graph& g, std::span<const Var> inputs, std::span<const std::string>, const EncodeContext&,
                       const BinaryCompositionTree*) const override {
    return {set_encode(g, projection_, inputs), std::nullopt};
  }

 private:
  Linear projection_;
};

class GruSection final : public SectionEncoder {
 public:
  GruSection(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng)
      : forward_(store, name + ".fw", in, out / 2, rng), backward_(store, name + ".bw", in, out / 2, rng) {}
  SectionKind kind() const override { return SectionKind::kGru; }
  std::size_t output_dim() const override { return 2 * forward_.hidden(); }
  SectionOutput encode(Graph& g, std::span<const Var> inputs, std::span<const std::string>, const EncodeContext&,
                       const BinaryCompositionTree*) const override {
    return {bigru_encode(g, forward_, backward_, inputs), std::nullopt};
  }

 private:
  GruCell forward_;
  GruCell backward_;
};

class LstmSection final : public SectionEncoder {
 public:
  LstmSection(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng)
      : forward_(store, name + ".fw", in, out / 2, rng), backward_(store, name + ".bw", in, out / 2, rng) {}
  SectionKind kind() const override { return SectionKind::kLstm; }
  std::size_t output_dim() const override { return 2 * forward_.hidden(); }
  SectionOutput encode(Graph& g, std::span<const Var> inputs, std::span<const std::string>, const EncodeContext&,
                       const BinaryCompositionTree*) const override {
    return {bilstm_encode(g, forward_, backward_, inputs), std::nullopt};
  }

 private:
  LstmCell forward_;
  LstmCell backward_;
};

class TreeSection final : public SectionEncoder {
 public:
  TreeSection(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng)
      : cell_(store, name + ".tree", in, out, rng) {}
  SectionKind kind() const override { return SectionKind::kTree; }
  std::size_t output_dim() const override { return cell_.hidden(); }
  SectionOutput encode(Graph& g, std::span<const Var> inputs, std::span<const std::string> labels,
                       const EncodeContext& ctx, const BinaryCompositionTree* forced) const override {
    TreeEncoding enc = forced ? tree_encode_fixed(g, cell_, inputs, labels, *forced, ctx)
                              : tree_encode(g, cell_, inputs, labels, ctx);
    return {enc.root.h, std::move(enc.tree)};
  }

 private:
  TreeLstmCell cell_;
};

}  // namespace

std::unique_ptr<SectionEncoder> make_section_encoder(SectionKind kind, ParameterStore& store,
                                                     const std::string& name, std::size_t input,
                                                     std::size_t output, std::mt19937_64& rng) {
  switch (kind) {
    case SectionKind::kSet:
      return std::make_unique<SetSection>(store, name, input, output, rng);
    case SectionKind::kGru:
      return std::make_unique<GruSection>(store, name, input, output, rng);
    case SectionKind::kLstm:
      return std::make_unique<LstmSection>(store, name, input, output, rng);
    case SectionKind::kTree:
      return std::make_unique<TreeSection>(store, name, input, output, rng);
  }
  throw ConfigError("unknown section encoder kind");
}

// ---------------------------------------------------------------------------
// Full recipe and image encoders

Var ProjectionStack::apply(Graph& g, Var x) const {
  const Var a = g.tanh(first.apply(g, x));
  const Var b = g.tanh(shared.apply(g, a));
  return last.apply(g, b);
}

RecipeEncoder::RecipeEncoder(const ModelConfig& config, ParameterStore& store, Tensor& words, const Linear& shared,
                             std::mt19937_64& rng)
    : config_(config),
      words_(&words),
      title_forward_(store, "title.fw", config.word_dim, config.section_dim / 2, rng),
      title_backward_(store, "title.bw", config.word_dim, config.section_dim / 2, rng),
      ingredients_(make_section_encoder(config.kinds.ingredient, store, "ingredients", config.word_dim,
                                        config.section_dim, rng)),
      sentences_(make_section_encoder(config.kinds.sentence, store, "sentence", config.word_dim,
                                      config.section_dim, rng)),
      instructions_(make_section_encoder(config.kinds.instruction, store, "instructions", config.section_dim,
                                         config.section_dim, rng)) {
  projection_.first = Linear::create(store, "text.fc1", 3 * config.section_dim, config.latent_dim, rng);
  projection_.shared = shared;
  projection_.last = Linear::create(store, "text.fc3", config.latent_dim, config.latent_dim, rng);
}

std::vector<Var> RecipeEncoder::words(Graph& g, std::span<const std::string> tokens, const Vocabulary& vocab) const {
  const auto indices = vocab.encode(tokens);
  return lookup(g, *words_, indices);
}

RecipeEncoding RecipeEncoder::encode(Graph& g, const TokenRecipe& recipe, const Vocabulary& vocab,
                                     const EncodeContext& ctx, const RecipeTrees* forced) const {
  if (recipe.title.empty()) throw ValidationError("recipe " + recipe.id + ": empty section 'title'");
  if (recipe.ingredients.empty()) throw ValidationError("recipe " + recipe.id + ": empty section 'ingredients'");
  if (recipe.instructions.empty()) throw ValidationError("recipe " + recipe.id + ": empty section 'instructions'");
  for (const auto& s : recipe.instructions) {
    if (s.empty()) throw ValidationError("recipe " + recipe.id + ": empty sentence in section 'instructions'");
  }

  RecipeEncoding out;
  const Var title = bigru_encode(g, title_forward_, title_backward_, words(g, recipe.title, vocab));

  const BinaryCompositionTree* forced_ingredients =
      forced && forced->ingredients ? &*forced->ingredients : nullptr;
  SectionOutput ingr =
      ingredients_->encode(g, words(g, recipe.ingredients, vocab), recipe.ingredients, ctx, forced_ingredients);
  out.trees.ingredients = std::move(ingr.tree);

  const bool forced_sentences = forced && !forced->sentences.empty();
  if (forced_sentences && forced->sentences.size() != recipe.instructions.size()) {
    throw ArgumentError("forced sentence trees do not match the recipe's sentence count");
  }
  std::vector<Var> sentence_vectors;
  std::vector<std::string> sentence_labels;
  for (std::size_t i = 0; i < recipe.instructions.size(); ++i) {
    const auto& sentence = recipe.instructions[i];
    SectionOutput s = sentences_->encode(g, words(g, sentence, vocab), sentence, ctx,
                                         forced_sentences ? &forced->sentences[i] : nullptr);
    sentence_vectors.push_back(s.vector);
    sentence_labels.push_back("s" + std::to_string(i));
    if (s.tree) out.trees.sentences.push_back(std::move(*s.tree));
  }
  const BinaryCompositionTree* forced_instructions =
      forced && forced->instructions ? &*forced->instructions : nullptr;
  SectionOutput instr = instructions_->encode(g, sentence_vectors, sentence_labels, ctx, forced_instructions);
  out.trees.instructions = std::move(instr.tree);

  out.latent = projection_.apply(g, g.concat({title, ingr.vector, instr.vector}));
  return out;
}

ImageProjector::ImageProjector(const ModelConfig& config, ParameterStore& store, const Linear& shared,
                               std::mt19937_64& rng)
    : input_dim_(config.image_dim) {
  projection_.first = Linear::create(store, "image.fc1", config.image_dim, config.latent_dim, rng);
  projection_.shared = shared;
  projection_.last = Linear::create(store, "image.fc3", config.latent_dim, config.latent_dim, rng);
}

Var ImageProjector::encode(Graph& g, std::span<const double> feature) const {
  if (feature.size() != input_dim_) {
    throw DimensionError("image feature has dimension " + std::to_string(feature.size()) + ", expected " +
                         std::to_string(input_dim_));
  }
  return projection_.apply(g, g.constant(std::vector<double>(feature.begin(), feature.end())));
}

}  // namespace recipetree
