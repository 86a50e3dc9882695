#include "recipetree/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "recipetree/errors.hpp"

namespace recipetree {

void AppConfig::set_seed(std::uint64_t value) {
  seed = value;
  train.seed = value;
  skipgram.seed = value;
  synth.seed = value;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& value, const std::string& where) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError(where + ": '" + value + "' is not a valid number");
  return out;
}

double parse_double(const std::string& value, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + value + "' is not a valid number");
  }
}

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(where + ": '" + value + "' is not a boolean");
}

}  // namespace

AppConfig parse_config(std::string_view text, const std::string& source) {
  AppConfig cfg;
  bool seed_set = false;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto size = [](std::size_t& slot) -> Setter {
    return [&slot](const std::string& v, const std::string& w) { slot = parse_number<std::size_t>(v, w); };
  };
  auto real = [](double& slot) -> Setter {
    return [&slot](const std::string& v, const std::string& w) { slot = parse_double(v, w); };
  };
  const std::map<std::string, Setter> setters = {
      {"encoders", [&](const std::string& v, const std::string&) { cfg.model.kinds = EncoderKinds::parse(v); }},
      {"word_dim", size(cfg.model.word_dim)},
      {"section_dim", size(cfg.model.section_dim)},
      {"latent_dim", size(cfg.model.latent_dim)},
      {"image_dim", size(cfg.model.image_dim)},
      {"temperature", real(cfg.model.temperature)},
      {"gumbel_hard", [&](const std::string& v, const std::string& w) { cfg.model.gumbel_hard = parse_bool(v, w); }},
      {"margin", real(cfg.train.margin)},
      {"learning_rate", real(cfg.train.learning_rate)},
      {"batch_size", size(cfg.train.batch_size)},
      {"epochs", size(cfg.train.epochs)},
      {"max_images_per_recipe", size(cfg.train.max_images_per_recipe)},
      {"checkpoint_every", size(cfg.train.checkpoint_every)},
      {"seed",
       [&](const std::string& v, const std::string& w) {
         seed_set = true;
         cfg.seed = parse_number<std::uint64_t>(v, w);
       }},
      {"min_count", size(cfg.min_count)},
      {"proximity_threshold", real(cfg.proximity_threshold)},
      {"skipgram_epochs", size(cfg.skipgram.epochs)},
      {"skipgram_window", size(cfg.skipgram.window)},
      {"skipgram_negatives", size(cfg.skipgram.negatives)},
      {"pool_size", size(cfg.pool_size)},
      {"repeats", size(cfg.repeats)},
      {"synth_recipes", size(cfg.synth.recipe_count)},
      {"synth_pool", size(cfg.synth.ingredient_pool_size)},
      {"synth_main_pool", size(cfg.synth.main_pool_size)},
      {"synth_ingredients", size(cfg.synth.ingredients_per_recipe)},
      {"synth_signal", real(cfg.synth.signal_strength)},
      {"synth_noise", real(cfg.synth.noise)},
      {"synth_images", size(cfg.synth.images_per_recipe)},
  };

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(number);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": key '" + key + "' has no value");
    it->second(value, where);
  }
  cfg.set_seed(seed_set ? cfg.seed : 0);
  cfg.synth.feature_dim = cfg.model.image_dim;
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace recipetree
