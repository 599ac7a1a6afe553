#include "topoflow/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace topoflow {

namespace {

using json = nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "version", "loss",        "hom_dims",  "selection",  "target",     "box_lower",      "box_upper",
      "box_weight", "mode",     "lr",        "sigma",      "subsample",  "epochs",         "stop",
      "stop_eps", "ema_decay",  "stop_increase", "val_reps", "val_every", "seed",         "record_time",
      "max_radius", "simplex_budget", "generator", "n",      "noise",      "box_dim",        "generator_seed",
      "input",    "output",     "flow",      "trace"};
  return keys;
}

template <class T>
T get(const json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::size_t get_count(const json& doc, const std::string& key) {
  const auto& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

double get_real(const json& doc, const std::string& key) {
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> get_reals(const json& doc, const std::string& key) {
  const auto& v = doc.at(key);
  if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("config key '" + key + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// Parse errors from helpers name the key already; others get it prepended.
template <class F>
void with_key(const std::string& key, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.loss = LossSpec::defaults_for(LossFamily::simplify);
  cfg.rips.simplex_budget = simplex_budget_from_env();
  return cfg;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");

  if (doc.contains("version") && get<int>(doc, "version") != kConfigVersion)
    throw ConfigError("config key 'version': unsupported version " + doc["version"].dump() + " (expected " +
                      std::to_string(kConfigVersion) + ")");

  RunConfig cfg = default_config();
  auto has = [&](const char* key) { return doc.contains(key) && !doc[key].is_null(); };

  if (has("loss"))
    with_key("loss", [&] { cfg.loss = LossSpec::defaults_for(parse_loss_family(get<std::string>(doc, "loss"))); });
  if (has("hom_dims")) cfg.loss.hom_dims = get<std::vector<int>>(doc, "hom_dims");
  if (has("selection")) {
    const auto& v = doc["selection"];
    if (v.is_string() && v.get<std::string>() == "all")
      cfg.loss.top_k.reset();
    else if (v.is_number_integer() && v.get<long long>() >= 1)
      cfg.loss.top_k = v.get<std::size_t>();
    else
      throw ConfigError("config key 'selection' must be \"all\" or a positive integer");
  }
  if (has("target"))
    with_key("target", [&] { cfg.loss.target = read_diagram(base_dir / get<std::string>(doc, "target")); });
  if (has("box_lower") || has("box_upper")) {
    if (!has("box_lower") || !has("box_upper"))
      throw ConfigError("config keys 'box_lower' and 'box_upper' must be given together");
    BoxRegularizer box{get_reals(doc, "box_lower"), get_reals(doc, "box_upper"), 1.0};
    if (has("box_weight")) box.weight = get_real(doc, "box_weight");
    cfg.loss.regularizer = std::move(box);
  } else if (has("box_weight")) {
    throw ConfigError("config key 'box_weight' requires 'box_lower' and 'box_upper'");
  }
  with_key("loss", [&] { cfg.loss.validate(); });

  auto& o = cfg.optim;
  if (has("mode")) with_key("mode", [&] { o.mode = parse_mode(get<std::string>(doc, "mode")); });
  if (has("lr")) o.lr = get_real(doc, "lr");
  if (has("sigma")) o.sigma = get_real(doc, "sigma");
  if (has("subsample")) o.subsample = get_count(doc, "subsample");
  if (has("epochs")) o.epochs = get_count(doc, "epochs");
  if (has("stop")) with_key("stop", [&] { o.stop.rule = parse_stop_rule(get<std::string>(doc, "stop")); });
  if (has("stop_eps")) o.stop.threshold = get_real(doc, "stop_eps");
  if (has("ema_decay")) o.stop.ema_decay = get_real(doc, "ema_decay");
  if (has("stop_increase")) o.stop.increase = get_real(doc, "stop_increase");
  if (has("val_reps")) o.val_reps = get_count(doc, "val_reps");
  if (has("val_every")) o.val_every = get_count(doc, "val_every");
  if (has("seed")) o.seed = get<std::uint64_t>(doc, "seed");
  if (has("record_time")) o.record_time = get<bool>(doc, "record_time");
  if (!(o.lr > 0.0)) throw ConfigError("config key 'lr' must be positive");
  if (!(o.sigma > 0.0)) throw ConfigError("config key 'sigma' must be positive");
  if (o.epochs < 1) throw ConfigError("config key 'epochs' must be at least 1");
  if (o.subsample && *o.subsample < 1) throw ConfigError("config key 'subsample' must be at least 1");
  if (o.val_reps && *o.val_reps < 1) throw ConfigError("config key 'val_reps' must be at least 1");

  if (has("max_radius")) {
    cfg.rips.max_radius = get_real(doc, "max_radius");
    if (!(*cfg.rips.max_radius > 0.0)) throw ConfigError("config key 'max_radius' must be positive");
  }
  if (has("simplex_budget")) cfg.rips.simplex_budget = get_count(doc, "simplex_budget");

  const bool any_generator = has("generator") || has("n") || has("noise") || has("box_dim") || has("generator_seed");
  if (any_generator) {
    if (!has("generator")) throw ConfigError("config key 'generator' is required with n/noise/box_dim");
    GeneratorSpec g;
    with_key("generator", [&] { g.shape = parse_shape(get<std::string>(doc, "generator")); });
    if (has("n")) g.n = get_count(doc, "n");
    if (has("noise")) g.noise_std = get_real(doc, "noise");
    if (has("box_dim")) g.box_dim = get_count(doc, "box_dim");
    cfg.generator_seed_pinned = has("generator_seed");
    g.seed = cfg.generator_seed_pinned ? get<std::uint64_t>(doc, "generator_seed") : o.seed;
    if (g.n < 1) throw ConfigError("config key 'n' must be at least 1");
    if (!(g.noise_std >= 0.0)) throw ConfigError("config key 'noise' must be non-negative");
    cfg.generator = g;
  }

  for (auto [key, field] : {std::pair{"input", &cfg.input}, std::pair{"output", &cfg.output},
                            std::pair{"flow", &cfg.flow}, std::pair{"trace", &cfg.trace}})
    if (has(key)) *field = get<std::string>(doc, key);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace topoflow
