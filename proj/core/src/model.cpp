#include "recipetree/model.hpp"

#include <fstream>
#include <random>

#include "recipetree/binary_io.hpp"
#include "recipetree/errors.hpp"

namespace recipetree {

namespace {
constexpr std::uint8_t kCheckpointVersion = 1;
}

Model::Model(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), seed_(seed), store_(std::make_unique<ParameterStore>()) {
  config_.validate();
  std::mt19937_64 rng(seed);
  WordTable table = WordTable::random(vocab_.size(), config_.word_dim, rng());
  words_ = &store_->add("words", std::move(table.matrix()));
  words_->set_requires_grad(true);
  shared_ = Linear::create(*store_, "shared.fc2", config_.latent_dim, config_.latent_dim, rng);
  recipe_ = std::make_unique<RecipeEncoder>(config_, *store_, *words_, shared_, rng);
  image_ = std::make_unique<ImageProjector>(config_, *store_, shared_, rng);
}

Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;
Model::~Model() = default;

void Model::set_word_vectors(const WordTable& table) {
  if (table.vocab_size() != words_->rows() || table.dim() != words_->cols()) {
    throw DimensionError("word table is " + std::to_string(table.vocab_size()) + "x" + std::to_string(table.dim()) +
                         ", model expects " + std::to_string(words_->rows()) + "x" + std::to_string(words_->cols()));
  }
  auto src = table.matrix().values();
  auto dst = words_->values();
  std::copy(src.begin(), src.end(), dst.begin());
}

std::vector<double> Model::embed_recipe(const TokenRecipe& recipe, RecipeTrees* trees, const RecipeTrees* forced,
                                        bool record_states) const {
  Graph g;
  EncodeContext ctx;
  ctx.mode = EncodeMode::kInfer;
  ctx.temperature = config_.temperature;
  ctx.record_states = record_states;
  RecipeEncoding enc = recipe_->encode(g, recipe, vocab_, ctx, forced);
  if (trees) *trees = std::move(enc.trees);
  auto v = g.value(enc.latent);
  return {v.begin(), v.end()};
}

std::vector<double> Model::embed_image(std::span<const double> feature) const {
  Graph g;
  auto v = g.value(image_->encode(g, feature));
  return {v.begin(), v.end()};
}

void Model::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  binary::write_magic(out, "RTCK");
  binary::write_u8(out, kCheckpointVersion);
  binary::write_string(out, config_.kinds.name());
  binary::write_u64(out, config_.word_dim);
  binary::write_u64(out, config_.section_dim);
  binary::write_u64(out, config_.latent_dim);
  binary::write_u64(out, config_.image_dim);
  binary::write_f64(out, config_.temperature);
  binary::write_u8(out, config_.gumbel_hard ? 1 : 0);
  binary::write_u64(out, vocab_.hash());
  binary::write_u64(out, seed_);
  binary::write_u64(out, store_->size());
  for (const auto& name : store_->names()) {
    const Tensor& t = store_->at(name);
    binary::write_string(out, name);
    binary::write_u8(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) binary::write_u64(out, d);
    binary::write_f64s(out, t.values());
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Model Model::load(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  binary::expect_magic(in, "RTCK", "checkpoint");
  const auto version = binary::read_u8(in);
  if (version != kCheckpointVersion) throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  ModelConfig config;
  config.kinds = EncoderKinds::parse(binary::read_string(in));
  config.word_dim = binary::read_u64(in);
  config.section_dim = binary::read_u64(in);
  config.latent_dim = binary::read_u64(in);
  config.image_dim = binary::read_u64(in);
  config.temperature = binary::read_f64(in);
  config.gumbel_hard = binary::read_u8(in) != 0;
  const std::uint64_t hash = binary::read_u64(in);
  if (hash != vocab.hash()) throw ValidationError("checkpoint was trained with a different vocabulary");
  const std::uint64_t seed = binary::read_u64(in);

  Model model(config, vocab, seed);
  const std::uint64_t count = binary::read_u64(in);
  if (count != model.store_->size()) {
    throw ValidationError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                          std::to_string(model.store_->size()));
  }
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::string name = binary::read_string(in);
    if (!model.store_->contains(name)) throw ValidationError("checkpoint tensor '" + name + "' is unknown");
    Tensor& t = model.store_->at(name);
    const std::size_t rank = binary::read_u8(in);
    Shape shape(rank);
    for (auto& d : shape) d = binary::read_u64(in);
    if (shape != t.shape()) {
      throw ValidationError("checkpoint tensor '" + name + "' has shape " + shape_to_string(shape) + ", expected " +
                            shape_to_string(t.shape()));
    }
    const auto values = binary::read_f64s(in, t.size());
    std::copy(values.begin(), values.end(), t.values().begin());
  }
  if (!binary::at_end(in)) throw ValidationError("trailing bytes after checkpoint tensors");
  return model;
}

}  // namespace recipetree
