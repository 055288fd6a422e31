#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rainflow/bench.hpp"
#include "rainflow/pipeline.hpp"
#include "rainflow/rainsim.hpp"

namespace rainflow {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every tunable of the solver, the renderer and the evaluation harness.
struct Config {
  SolverParams solver;
  RainParams rain;
  int bench_border = kDefaultBorder;

  bool operator==(const Config&) const = default;
};

struct ConfigKey {
  std::string name;
  std::string description;
  std::string default_value;
};

/// All recognised keys with their defaults, in serialisation order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key; throws ConfigError for unknown keys or malformed values.
void set_config_value(Config& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const Config& cfg, const std::string& key);

/// `key = value` lines; '#' starts a comment. Later lines override earlier ones.
Config parse_config(const std::string& text, Config base = {});
Config read_config(const std::string& path, Config base = {});
/// Every key, one per line, doubles printed with 17 significant digits.
std::string serialize_config(const Config& cfg);

/// Applies a single `key=value` override string.
void apply_override(Config& cfg, const std::string& assignment);

}  // namespace rainflow
