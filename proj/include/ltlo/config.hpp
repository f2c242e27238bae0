#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ltlo/decompose.hpp"
#include "ltlo/envs.hpp"
#include "ltlo/trainer.hpp"

namespace ltlo {

struct EvalSettings {
  std::string family = "dnf";  // dnf | recursive | sequence
  int count = 64;
  std::uint64_t seed = 1;
  bool shield = true;
  double kappa = 9.95;
  bool myopic = false;
  int max_sequences = 256;
  int max_depth = 12;
};

struct Config {
  EnvParams env;
  TrainConfig train;
  EvalSettings eval;
  std::string out_dir = "run";
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// INI text with [env], [train], [eval] and [io] sections. `env.kind` picks
/// the per-kind defaults before other keys apply. Unknown sections, keys or
/// malformed values throw ConfigError naming the key.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

/// "section.key=value".
void apply_override(Config& config, std::string_view assignment);

/// Canonical INI listing of every key.
std::string to_ini(const Config& config);

/// Every known "section.key", in listing order.
std::vector<std::string> config_keys();

DecompositionCaps caps_of(const EvalSettings& eval);

}  // namespace ltlo
