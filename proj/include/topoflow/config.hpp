#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "topoflow/io.hpp"
#include "topoflow/losses.hpp"
#include "topoflow/optimizer.hpp"
#include "topoflow/rips.hpp"

namespace topoflow {

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kConfigVersion = 1;

/// Everything one `optimize` or `bench` run needs. Relative paths are kept as
/// written.
struct RunConfig {
  LossSpec loss;
  OptimConfig optim;
  RipsOptions rips;
  std::optional<GeneratorSpec> generator;  // used when no input path is given
  bool generator_seed_pinned = false;      // generator_seed given explicitly
  std::string input;
  std::string output;
  std::string flow;
  std::string trace;
};

/// Parses a flat JSON object. Unknown keys, wrong types and out-of-range values
/// raise ConfigError naming the key. A `target` key names a diagram CSV that is
/// read relative to `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Defaults: diffeo mode, lr 0.1, sigma 0.1, simplify loss on H1.
RunConfig default_config();

}  // namespace topoflow
