// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "recipetree/dataset.hpp"
#include "recipetree/encoders.hpp"
#include "recipetree/model.hpp"
#include "recipetree/retrieval.hpp"
#include "recipetree/synthetic.hpp"
#include "recipetree/training.hpp"
#include "recipetree/tree_analysis.hpp"

namespace fs = std::filesystem;
using namespace recipetree;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// Central finite differences, written independently of the library checker.

constexpr double kEps = 1e-5;
constexpr double kRelTol = 1e-4;
constexpr double kAbsFloor = 1e-8;

struct FdStats {
  double rel = 0.0;
  double abs = 0.0;
  std::size_t checked = 0;

  void merge(const FdStats& o) {
    rel = std::max(rel, o.rel);
    abs = std::max(abs, o.abs);
    checked += o.checked;
  }
};

FdStats fd_check(const std::function<Var(Graph&)>& build, const std::vector<Tensor*>& inputs) {
  for (Tensor* t : inputs) t->zero_grad();
  {
    Graph g;
    g.backward(build(g));
  }
  auto eval = [&] {
    Graph g;
    return g.scalar(build(g));
  };
  FdStats st;
  for (Tensor* t : inputs) {
    const std::vector<double> analytic(t->grad().begin(), t->grad().end());
    for (std::size_t i = 0; i < t->size(); ++i) {
      double& x = t->values()[i];
      const double saved = x;
      x = saved + kEps;
      const double up = eval();
      x = saved - kEps;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * kEps);
      const double diff = std::abs(numeric - analytic[i]);
      st.abs = std::max(st.abs, diff);
      if (diff > kAbsFloor) st.rel = std::max(st.rel, diff / std::max(std::abs(numeric), std::abs(analytic[i])));
      ++st.checked;
    }
  }
  return st;
}

Tensor random_tensor(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  return Tensor::vector(oracle::random_vec(rng, n, scale), true);
}

void randomize(ParameterStore& store, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  for (const auto& name : store.names())
    for (double& v : store.at(name).values()) v = n(rng);
}

Outcome criterion_gradients() {
  constexpr int kInstances = 20;
  std::map<std::string, FdStats> worst;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> dim(2, 5);
  for (int inst = 0; inst < kInstances; ++inst) {
    const std::size_t in = dim(rng), hid = dim(rng);
    {
      ParameterStore store;
      GruCell cell(store, "gru", in, hid, rng);
      randomize(store, rng, 0.7);
      Tensor x = random_tensor(rng, in), h = random_tensor(rng, hid, 0.5), w = random_tensor(rng, hid);
      std::vector<Tensor*> ins = {&x, &h};
      for (const auto& n : store.names()) ins.push_back(&store.at(n));
      worst["GRU"].merge(fd_check([&](Graph& g) {
        return g.dot(cell.step(g, g.param(x), g.param(h)), g.constant(w));
      }, ins));
    }
    {
      ParameterStore store;
      LstmCell cell(store, "lstm", in, hid, rng);
      randomize(store, rng, 0.7);
      Tensor x = random_tensor(rng, in), h = random_tensor(rng, hid, 0.5), c = random_tensor(rng, hid, 0.5);
      Tensor w = random_tensor(rng, 2 * hid);
      std::vector<Tensor*> ins = {&x, &h, &c};
      for (const auto& n : store.names()) ins.push_back(&store.at(n));
      worst["LSTM"].merge(fd_check([&](Graph& g) {
        auto s = cell.step(g, g.param(x), {g.param(h), g.param(c)});
        return g.dot(g.concat({s.h, s.c}), g.constant(w));
      }, ins));
    }
    {
      ParameterStore store;
      TreeLstmCell cell(store, "tree", in, hid, rng);
      randomize(store, rng, 0.7);
      Tensor hl = random_tensor(rng, hid), cl = random_tensor(rng, hid), hr = random_tensor(rng, hid);
      Tensor cr = random_tensor(rng, hid), w = random_tensor(rng, 2 * hid);
      std::vector<Tensor*> ins = {&hl, &cl, &hr, &cr, cell.composition().weight, cell.composition().bias};
      worst["Tree-LSTM compose"].merge(fd_check([&](Graph& g) {
        auto p = cell.compose(g, {g.param(hl), g.param(cl)}, {g.param(hr), g.param(cr)});
        return g.dot(g.concat({p.h, p.c}), g.constant(w));
      }, ins));
    }
    {
      const std::size_t k = dim(rng);
      Tensor logits = random_tensor(rng, k), w = random_tensor(rng, k);
      std::vector<double> noise = oracle::random_vec(rng, k, 0.5);
      const double tau = 0.5 + static_cast<double>(inst % 4) * 0.5;
      worst["Gumbel soft path"].merge(fd_check([&](Graph& g) {
        return g.dot(g.gumbel_softmax(g.param(logits), tau, noise, false), g.constant(w));
      }, {&logits}));
    }
    {
      ParameterStore store;
      const std::size_t mid = dim(rng), out = dim(rng);
      ProjectionStack stack{Linear::create(store, "fc1", in, hid, rng), Linear::create(store, "fc2", hid, mid, rng),
                            Linear::create(store, "fc3", mid, out, rng)};
      Tensor x = random_tensor(rng, in), w = random_tensor(rng, out);
      std::vector<Tensor*> ins = {&x};
      for (const auto& n : store.names()) ins.push_back(&store.at(n));
      worst["FC stack"].merge(fd_check([&](Graph& g) {
        return g.dot(stack.apply(g, g.param(x)), g.constant(w));
      }, ins));
    }
    {
      Tensor a = random_tensor(rng, in), b = random_tensor(rng, in);
      worst["cosine"].merge(fd_check([&](Graph& g) {
        return g.cosine(g.param(a), g.param(b));
      }, {&a, &b}));
    }
    {
      Tensor p = random_tensor(rng, in), q = random_tensor(rng, in), qn = random_tensor(rng, in);
      Tensor pn = random_tensor(rng, in);
      // Margin 1.9 keeps both hinges active, away from the kink.
      worst["hinge loss"].merge(fd_check([&](Graph& g) {
        return triplet_loss(g, g.param(p), g.param(q), g.param(qn), g.param(pn), 1.9);
      }, {&p, &q, &qn, &pn}));
    }
  }
  Outcome o{true, fmt("%d instances per cell; max rel / max abs error (elements):", kInstances)};
  for (const auto& [cell, st] : worst) {
    o.pass &= st.rel <= kRelTol;
    o.detail += fmt(" %s %.1e/%.1e (%zu)", cell.c_str(), st.rel, st.abs, st.checked);
  }
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion_tree_invariants() {
  std::mt19937_64 rng(202);
  ParameterStore store;
  TreeLstmCell cell(store, "tree", 4, 3, rng);
  randomize(store, rng, 0.8);
  std::size_t failures = 0, nondeterministic = 0;
  for (int call = 0; call < 1000; ++call) {
    const std::size_t n = 1 + rng() % 16;
    std::vector<std::vector<double>> xs;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(oracle::random_vec(rng, 4));
      labels.push_back("t" + std::to_string(i));
    }
    auto run = [&](EncodeMode mode, std::uint64_t seed) {
      Graph g;
      std::mt19937_64 noise(seed);
      EncodeContext ctx;
      ctx.mode = mode;
      ctx.rng = &noise;
      std::vector<Var> inputs;
      for (const auto& x : xs) inputs.push_back(g.constant(x));
      auto enc = tree_encode(g, cell, inputs, labels, ctx);
      auto h = g.value(enc.root.h);
      return std::make_pair(std::move(enc.tree), std::vector<double>(h.begin(), h.end()));
    };
    const EncodeMode mode = call % 2 ? EncodeMode::kTrain : EncodeMode::kInfer;
    auto [tree, root] = run(mode, static_cast<std::uint64_t>(call));
    bool ok = tree.leaf_count() == n && tree.internal_count() == n - 1 && tree.in_order_leaves() == labels;
    try {
      tree.validate();
      BinaryCompositionTree::parse_sexpr(tree.to_sexpr());
    } catch (const std::exception&) {
      ok = false;
    }
    failures += !ok;
    if (mode == EncodeMode::kInfer) {
      auto [tree2, root2] = run(mode, static_cast<std::uint64_t>(call) + 7);
      nondeterministic += tree2.to_sexpr() != tree.to_sexpr() || root2 != root;
    }
  }
  return {failures == 0 && nondeterministic == 0,
          fmt("1000 calls; invariant violations %zu; infer-mode mismatches %zu", failures, nondeterministic)};
}

// ---------------------------------------------------------------------------

Outcome criterion_oracle_equivalence() {
  std::mt19937_64 rng(303);
  std::size_t mismatches = 0;
  std::vector<std::size_t> idx(20);
  std::iota(idx.begin(), idx.end(), 0);
  for (int pool = 0; pool < 50; ++pool) {
    std::vector<Latent> recipes, images;
    for (int i = 0; i < 20; ++i) {
      recipes.push_back(oracle::random_vec(rng, 6));
      auto img = recipes.back();
      for (double& v : img) v += oracle::random_vec(rng, 1, 1.5)[0];
      images.push_back(img);
    }
    const auto res = evaluate_latents(recipes, images, 20, 1, static_cast<std::uint64_t>(pool));
    for (const auto& [report, q, c] : {std::tuple{&res.image_to_recipe, &images, &recipes},
                                       std::tuple{&res.recipe_to_image, &recipes, &images}}) {
      const auto ranks = oracle::brute_force_ranks(*q, *c, idx);
      mismatches += report->medR != oracle::median(ranks) || report->r1 != oracle::recall(ranks, 1) ||
                    report->r5 != oracle::recall(ranks, 5) || report->r10 != oracle::recall(ranks, 10);
    }
  }
  double compose_err = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    ParameterStore store;
    const std::size_t hid = 2 + inst % 5;
    TreeLstmCell cell(store, "tree", 3, hid, rng);
    randomize(store, rng, 1.0);
    oracle::State l{oracle::random_vec(rng, hid), oracle::random_vec(rng, hid)};
    oracle::State r{oracle::random_vec(rng, hid), oracle::random_vec(rng, hid)};
    const auto& comp = cell.composition();
    const std::vector<double> w(comp.weight->values().begin(), comp.weight->values().end());
    const std::vector<double> b(comp.bias->values().begin(), comp.bias->values().end());
    const auto ref = oracle::tree_compose(oracle::to_mat(w, 5 * hid, 2 * hid), b, l, r);
    Graph g;
    auto p = cell.compose(g, {g.constant(l.h), g.constant(l.c)}, {g.constant(r.h), g.constant(r.c)});
    for (std::size_t k = 0; k < hid; ++k) {
      compose_err = std::max(compose_err, std::abs(g.value(p.h)[k] - ref.h[k]));
      compose_err = std::max(compose_err, std::abs(g.value(p.c)[k] - ref.c[k]));
    }
  }
  return {mismatches == 0 && compose_err <= 1e-12,
          fmt("50 pools x 2 directions, metric mismatches %zu; compose max |err| %.1e", mismatches, compose_err)};
}

// ---------------------------------------------------------------------------
// Synthetic training helpers shared by criteria 4-7.

struct Trained {
  SyntheticCorpus corpus;
  std::vector<TokenRecipe> recipes;
  std::unique_ptr<Model> model;
  double seconds = 0.0;
  std::size_t epochs_run = 0;
  // First epoch after which the monitor reported success (0 = never).
  std::size_t first_hit = 0;
};

struct RunSpec {
  SyntheticSpec synth;
  std::string kinds = "T+L+L";
  std::size_t word_dim = 16, section_dim = 32, latent_dim = 32;
  TrainConfig train;
  std::uint64_t model_seed = 7;
  // Checked after every epoch; the first epoch where it holds is recorded.
  std::function<bool(const Model&, const std::vector<TokenRecipe>&, const FeatureStore&)> monitor;
};

Trained train_synthetic(const RunSpec& spec) {
  Trained t;
  t.corpus = generate_synthetic(spec.synth);
  CanonicalMap canon;
  register_ingredient_phrases(canon, t.corpus.records);
  t.recipes = tokenize_dataset(Dataset{t.corpus.records}, canon);
  std::vector<std::vector<std::string>> seqs;
  for (const auto& r : t.recipes)
    for (auto& s : token_sequences(r)) seqs.push_back(std::move(s));
  ModelConfig mc;
  mc.kinds = EncoderKinds::parse(spec.kinds);
  mc.word_dim = spec.word_dim;
  mc.section_dim = spec.section_dim;
  mc.latent_dim = spec.latent_dim;
  mc.image_dim = spec.synth.feature_dim;
  t.model = std::make_unique<Model>(mc, Vocabulary::build(seqs, 1), spec.model_seed);
  const auto items = make_training_items(t.recipes, t.corpus.features, spec.train.max_images_per_recipe);
  const auto start = std::chrono::steady_clock::now();
  if (spec.train.epochs > 0) {
    train(*t.model, items, spec.train, [&](std::size_t epoch, double) {
      t.epochs_run = epoch;
      if (spec.monitor && !t.first_hit && spec.monitor(*t.model, t.recipes, t.corpus.features)) t.first_hit = epoch;
    });
  }
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return t;
}

std::size_t main_index(const TokenRecipe& r) {
  const auto& w = *r.ingredient_weights;
  return static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
}

bool overfit(const EvaluationResult& e) {
  return e.image_to_recipe.medR == 1.0 && e.recipe_to_image.medR == 1.0 && e.image_to_recipe.r1 >= 90.0 &&
         e.recipe_to_image.r1 >= 90.0;
}

// Toy corpus: 32 recipes, each with its own main ingredient so that every
// recipe/image pair is individually identifiable.
RunSpec toy_spec() {
  RunSpec s;
  s.synth.recipe_count = 32;
  s.synth.main_pool_size = 32;
  s.synth.ingredient_pool_size = 52;
  s.synth.ingredients_per_recipe = 5;
  s.synth.signal_strength = 0.9;
  s.synth.noise = 0.01;
  s.synth.feature_dim = 32;
  s.synth.seed = 1;
  s.train.epochs = 200;
  s.train.batch_size = 16;
  s.train.learning_rate = 0.003;
  s.train.seed = 1;
  s.monitor = [](const Model& m, const std::vector<TokenRecipe>& r, const FeatureStore& f) {
    return overfit(evaluate(m, r, f, r.size(), 1, 0));
  };
  return s;
}

Outcome criterion_toy_overfit(const Trained& toy) {
  const auto e = evaluate(*toy.model, toy.recipes, toy.corpus.features, toy.recipes.size(), 1, 0);
  return {overfit(e) && toy.epochs_run <= 200,
          fmt("%zu epochs (criterion first met at epoch %zu), %.1fs; im2recipe medR %.1f R@1 %.1f; recipe2im medR %.1f R@1 %.1f", toy.epochs_run,
              toy.first_hit, toy.seconds, e.image_to_recipe.medR, e.image_to_recipe.r1, e.recipe_to_image.medR,
              e.recipe_to_image.r1)};
}

RunSpec planted_spec(std::uint64_t seed) {
  RunSpec s;
  s.synth.recipe_count = 200;
  s.synth.main_pool_size = 10;
  s.synth.ingredient_pool_size = 30;
  s.synth.ingredients_per_recipe = 8;
  s.synth.signal_strength = 0.9;
  s.synth.noise = 0.05;
  s.synth.feature_dim = 32;
  s.synth.seed = seed;
  s.model_seed = seed + 100;
  s.train.epochs = 20;
  s.train.batch_size = 16;
  s.train.learning_rate = 0.003;
  s.train.seed = seed;
  return s;
}

Outcome criterion_main_ingredient(const std::vector<Trained>& runs, const std::vector<double>& untrained) {
  double total = 0.0;
  std::string per;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double r1 = main_ingredient_rank_eval(*runs[i].model, runs[i].recipes).r1;
    total += r1;
    per += fmt(" %.1f", r1);
  }
  const double mean = total / static_cast<double>(runs.size());
  double base = 0.0;
  for (double u : untrained) base += u / static_cast<double>(untrained.size());
  return {mean >= 25.0, fmt("main-ingredient R@1 over 3 seeds:%s (mean %.1f%%, untrained mean %.1f%%, chance 12.5%%)",
                            per.c_str(), mean, base)};
}

// ---------------------------------------------------------------------------

EvaluationResult evaluate_recipes(const Model& model, const std::vector<TokenRecipe>& recipes,
                                  const FeatureStore& features) {
  return evaluate(model, recipes, features, recipes.size(), 1, 0);
}

Outcome criterion_pruning(const Trained& toy) {
  const Model& m = *toy.model;
  const auto base = evaluate_recipes(m, toy.recipes, toy.corpus.features);
  std::string detail = fmt("unpruned medR %.1f/%.1f", base.image_to_recipe.medR, base.recipe_to_image.medR);
  bool pass = true;
  std::vector<BinaryCompositionTree> trees;
  for (const auto& r : toy.recipes) {
    RecipeTrees t;
    m.embed_recipe(r, &t);
    trees.push_back(*t.ingredients);
  }
  for (std::size_t k : {1, 2}) {
    try {
      std::vector<TokenRecipe> pruned;
      for (std::size_t i = 0; i < toy.recipes.size(); ++i)
        pruned.push_back(prune(toy.recipes[i], trees[i], PruneMode::kRemoveLastK, k));
      const auto e = evaluate_recipes(m, pruned, toy.corpus.features);
      pass &= e.image_to_recipe.medR <= base.image_to_recipe.medR + 1.0 &&
              e.recipe_to_image.medR <= base.recipe_to_image.medR + 1.0;
      detail += fmt("; K=%zu medR %.1f/%.1f", k, e.image_to_recipe.medR, e.recipe_to_image.medR);
    } catch (const std::exception& ex) {
      pass = false;
      detail += fmt("; K=%zu threw: %s", k, ex.what());
    }
  }
  std::size_t changed = 0;
  for (std::size_t i = 0; i < toy.recipes.size(); ++i) {
    const auto depths = trees[i].leaf_depths();
    const std::size_t max_depth = *std::max_element(depths.begin(), depths.end());
    const auto kept = prune(toy.recipes[i], trees[i], PruneMode::kKeepDepthK, max_depth);
    changed += m.embed_recipe(kept) != m.embed_recipe(toy.recipes[i]);
  }
  pass &= changed == 0;
  detail += fmt("; keep_depth_K(max) changed %zu embeddings", changed);
  return {pass, detail};
}

// ---------------------------------------------------------------------------

std::vector<double> mean_of(const std::vector<const Latent*>& vs) {
  std::vector<double> out(vs.front()->size(), 0.0);
  for (const auto* v : vs)
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += (*v)[d] / static_cast<double>(vs.size());
  return out;
}

Outcome criterion_substitution(const Trained& toy, const std::vector<Trained>& planted) {
  const Model& m = *toy.model;
  bool pass = true;

  std::size_t identity_mismatch = 0;
  for (const auto& r : toy.recipes) {
    RecipeTrees trees;
    const auto original = m.embed_recipe(r, &trees);
    for (const auto& x : r.ingredients) {
      identity_mismatch += embed_substitution(m, substitute(r, x, x, false)) != original;
      identity_mismatch += embed_substitution(m, substitute(r, x, x, true, &trees)) != original;
    }
  }
  pass &= identity_mismatch == 0;
  std::string detail = fmt("x->x mismatches %zu", identity_mismatch);

  // SR probe: ten recipes take recipe 0's main ingredient; compare against a manual count.
  RetrievalCorpus corpus;
  for (const auto& r : toy.recipes) {
    corpus.recipes.push_back(m.embed_recipe(r));
    corpus.images.push_back(m.embed_image(*toy.corpus.features.find(r.image_ids.front())));
    corpus.ingredients.emplace_back(r.ingredients.begin(), r.ingredients.end());
  }
  const std::string target = toy.recipes[0].ingredients[main_index(toy.recipes[0])];
  std::vector<SubstitutionQuery> queries;
  for (std::size_t i = 1; i <= 10; ++i) {
    const auto& r = toy.recipes[i];
    queries.push_back({embed_substitution(m, substitute(r, r.ingredients[main_index(r)], target, false)), i});
  }
  for (auto mode : {SubstitutionTarget::kImage, SubstitutionTarget::kRecipe}) {
    const auto& cands = mode == SubstitutionTarget::kImage ? corpus.images : corpus.recipes;
    std::size_t hits = 0;
    for (const auto& q : queries) {
      std::size_t best = cands.size();
      double best_sim = 0.0;
      for (std::size_t j = 0; j < cands.size(); ++j) {
        if (mode == SubstitutionTarget::kRecipe && j == q.source) continue;
        const double s = oracle::cosine(q.latent, cands[j]);
        if (best == cands.size() || s > best_sim) best = j, best_sim = s;
      }
      hits += corpus.ingredients[best].count(target);
    }
    SubstitutionOptions opts;
    opts.target = mode;
    const double sr = substitution_success_rate(queries, corpus, target, opts);
    pass &= sr == 10.0 * static_cast<double>(hits);
    detail += fmt("; SR %s %.0f%% (manual %zu/10)", mode == SubstitutionTarget::kImage ? "R2I" : "R2R", sr, hits);
  }

  // Centroid probe on the planted-signal models: swap each recipe's main for the
  // next main ingredient and compare cosines to the two class centroids.
  std::size_t closer = 0, probes = 0;
  for (const auto& run : planted) {
    const Model& pm = *run.model;
    std::vector<Latent> emb;
    std::map<std::string, std::vector<std::size_t>> by_main;
    std::vector<std::string> mains;
    for (std::size_t i = 0; i < run.recipes.size(); ++i) {
      emb.push_back(pm.embed_recipe(run.recipes[i]));
      const std::string& main = run.recipes[i].ingredients[main_index(run.recipes[i])];
      if (!by_main.count(main)) mains.push_back(main);
      by_main[main].push_back(i);
    }
    for (std::size_t i = 0; i < run.recipes.size(); ++i) {
      const auto& r = run.recipes[i];
      const std::string& from = r.ingredients[main_index(r)];
      const auto pos = static_cast<std::size_t>(std::find(mains.begin(), mains.end(), from) - mains.begin());
      const std::string& to = mains[(pos + 1) % mains.size()];
      if (std::find(r.ingredients.begin(), r.ingredients.end(), to) != r.ingredients.end()) continue;
      std::vector<const Latent*> own, other;
      for (std::size_t j : by_main[from])
        if (j != i) own.push_back(&emb[j]);
      for (std::size_t j : by_main[to]) other.push_back(&emb[j]);
      const auto moved = embed_substitution(pm, substitute(r, from, to, false));
      closer += oracle::cosine(moved, mean_of(other)) > oracle::cosine(moved, mean_of(own));
      ++probes;
    }
  }
  const double rate = 100.0 * static_cast<double>(closer) / static_cast<double>(probes);
  pass &= rate >= 60.0;
  detail += fmt("; centroid probe %zu/%zu closer to target (%.1f%%, 3 seeds)", closer, probes, rate);
  return {pass, detail};
}

// ---------------------------------------------------------------------------

BinaryCompositionTree verb_first(std::vector<std::string> tokens) {
  // Always merging the last adjacent pair leaves the first token at depth 1.
  std::vector<std::size_t> pos;
  for (std::size_t k = tokens.size(); k > 1; --k) pos.push_back(k - 2);
  return BinaryCompositionTree::from_merge_positions(tokens, pos);
}

Outcome criterion_action_words(const fs::path& lexicon_path) {
  const VerbLexicon lex = VerbLexicon::load(lexicon_path);
  bool pass = true;
  std::string detail;
  const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> figures = {
      {{paper_trees::kSentenceA1, paper_trees::kSentenceB1, paper_trees::kSentenceC1, paper_trees::kSentenceD1},
       {"marinate", "375", "uncover", "cover"}},
      {{paper_trees::kSentenceA2, paper_trees::kSentenceB2, paper_trees::kSentenceC2, paper_trees::kSentenceD2},
       {"ingredients", "degrees", ".", "minutes"}},
  };
  const std::size_t manual_verbs[] = {3, 0};
  for (std::size_t f = 0; f < figures.size(); ++f) {
    std::vector<BinaryCompositionTree> trees;
    for (std::size_t i = 0; i < 4; ++i) {
      trees.push_back(BinaryCompositionTree::parse_sexpr(figures[f].first[i]));
      pass &= main_ingredient(trees.back()) == figures[f].second[i];
    }
    const auto stats = action_word_stats(trees, lex);
    pass &= stats.verb_count == manual_verbs[f] && stats.sentence_trees == 4 &&
            stats.percentage == 100.0 * static_cast<double>(manual_verbs[f]) / 4.0;
    detail += fmt("%smodel %zu: %zu/4 verbs (%.0f%%)", f ? "; " : "", f + 1, stats.verb_count, stats.percentage);
  }
  // Constructed corpora with known verb counts.
  struct Corpus {
    std::vector<std::vector<std::string>> sentences;
    std::size_t verbs;
  };
  const std::vector<Corpus> corpora = {
      {{{"bake", "the", "bread"}, {"the", "oven", "is", "hot"}, {"stir", "well"}, {"salt"}, {"chop", "onions"},
        {"serve"}, {"15", "minutes"}},
       4},
      {{{"whisk", "eggs"}, {"fold", "in", "flour"}, {"simmer", "gently", "."}}, 3},
      {{{"a", "b"}, {"c"}, {"the", "end", "."}, {"oven", "mitts"}, {"375", "degrees"}, {"x"}, {"y"}, {"z"},
        {"pan", "."}},
       0},
  };
  for (const auto& c : corpora) {
    std::vector<BinaryCompositionTree> trees;
    for (const auto& s : c.sentences) trees.push_back(verb_first(s));
    const auto stats = action_word_stats(trees, lex);
    const double expected = 100.0 * static_cast<double>(c.verbs) / static_cast<double>(c.sentences.size());
    pass &= stats.verb_count == c.verbs && std::abs(stats.percentage - expected) <= 1e-12;
    detail += fmt("; corpus %zu/%zu (%.2f%%)", stats.verb_count, c.sentences.size(), stats.percentage);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd, const fs::path& log) {
  const std::string full = cmd + " >> \"" + log.string() + "\" 2>&1";
  return std::system(full.c_str());
}

Outcome criterion_determinism(const fs::path& cli, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path cfg = work / "pipeline.cfg";
  std::ofstream(cfg) << "encoders = T+T+L\nword_dim = 16\nsection_dim = 32\nlatent_dim = 32\nimage_dim = 32\n"
                        "epochs = 4\nbatch_size = 16\nmin_count = 2\npool_size = 15\nrepeats = 3\n"
                        "synth_recipes = 120\nsynth_main_pool = 10\nsynth_pool = 30\nsynth_ingredients = 6\n"
                        "skipgram_epochs = 2\n";
  const fs::path log = work / "pipeline.log";
  std::string reports[2];
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = work / ("run" + std::to_string(pass));
    fs::create_directories(dir);
    const std::string base = "\"" + cli.string() + "\" --config \"" + cfg.string() + "\" --seed 5 --workdir \"" +
                             dir.string() + "\" --checkpoint \"" + (dir / "model.ckpt").string() + "\" ";
    for (const char* step : {"synth", "prep", "pretrain", "train", "eval"}) {
      if (int rc = run(base + step, log); rc != 0) {
        return {false, fmt("run %d step '%s' exited %d (see %s)", pass, step, rc, log.string().c_str())};
      }
    }
    reports[pass] = slurp(dir / "report.json");
  }
  bool pass = !reports[0].empty() && reports[0] == reports[1];
  std::string detail = fmt("report.json %s across runs (%zu bytes)", reports[0] == reports[1] ? "identical" : "DIFFERS",
                           reports[0].size());

  // Checkpoint round-trip: reload, re-save, evaluate with the copy.
  const fs::path dir = work / "run0";
  const Vocabulary vocab = Vocabulary::load(dir / "vocab.txt");
  const Model model = Model::load(dir / "model.ckpt", vocab);
  model.save(dir / "copy.ckpt");
  const bool same_bytes = slurp(dir / "model.ckpt") == slurp(dir / "copy.ckpt");
  const std::string cmd = "\"" + cli.string() + "\" --config \"" + cfg.string() + "\" --seed 5 --workdir \"" +
                          dir.string() + "\" --checkpoint \"" + (dir / "copy.ckpt").string() + "\" eval --out \"" +
                          (dir / "report_copy.json").string() + "\"";
  const int rc = run(cmd, log);
  const bool same_report = rc == 0 && slurp(dir / "report_copy.json") == reports[0];
  pass &= same_bytes && same_report;
  detail += fmt("; checkpoint re-save %s, reloaded eval %s", same_bytes ? "byte-identical" : "DIFFERS",
                same_report ? "identical" : "DIFFERS");
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recipetree acceptance suite"};
  std::string cli, workdir = "acceptance_work", lexicon = RECIPETREE_LEXICON;
  app.add_option("--cli", cli, "path to the recipetree executable")->required();
  app.add_option("--workdir", workdir, "scratch directory for the pipeline runs");
  app.add_option("--lexicon", lexicon, "verb lexicon");
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << " (" << fmt("%.1fs", secs) << "): "
              << o.detail << std::endl;
  };

  report(1, "gradient correctness", criterion_gradients);
  report(2, "tree structural invariants", criterion_tree_invariants);
  report(3, "oracle equivalence", criterion_oracle_equivalence);

  Trained toy;
  report(4, "toy overfit", [&] {
    toy = train_synthetic(toy_spec());
    return criterion_toy_overfit(toy);
  });

  std::vector<Trained> planted;
  report(5, "planted main-ingredient recovery", [&] {
    std::vector<double> untrained;
    for (std::uint64_t seed : {11, 12, 13}) {
      RunSpec s = planted_spec(seed);
      RunSpec none = s;
      none.train.epochs = 0;
      Trained fresh = train_synthetic(none);
      untrained.push_back(main_ingredient_rank_eval(*fresh.model, fresh.recipes).r1);
      planted.push_back(train_synthetic(s));
    }
    return criterion_main_ingredient(planted, untrained);
  });

  report(6, "pruning safety", [&] {
    if (!toy.model) return Outcome{false, "toy model unavailable"};
    return criterion_pruning(toy);
  });
  report(7, "substitution machinery", [&] {
    if (!toy.model || planted.size() != 3) return Outcome{false, "trained models unavailable"};
    return criterion_substitution(toy, planted);
  });
  report(8, "action-word plumbing", [&] { return criterion_action_words(lexicon); });
  report(9, "determinism and persistence", [&] { return criterion_determinism(cli, workdir); });

  std::cout << (failed ? "FAILED " : "ALL PASSED ") << 9 - failed << "/9" << std::endl;
  return failed ? 1 : 0;
}
