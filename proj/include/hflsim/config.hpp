#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hflsim/dataset.hpp"
#include "hflsim/game.hpp"
#include "hflsim/hfl.hpp"

namespace hflsim {

// Parse/validation failure; names the offending key and line.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class RunMode { Game, Phase, Hfl, Sweep };

struct DataConfig {
  std::string root;        // empty: $HFLSIM_DATA_ROOT, else data/mnist10k
  size_t train_limit = 0;  // 0: use the full training file
  PartitionSpec spec;

  std::string resolved_root() const;
};

struct SweepAxis {
  std::string parameter;
  std::vector<double> values;
};

struct ExperimentConfig {
  RunMode mode = RunMode::Game;
  std::string output_dir = "out";
  uint64_t master_seed = 0;
  size_t n_inits = 10;  // phase mode
  std::string init = "random";  // game/phase initial state: random | uniform
  GameConfig game;
  HFLConfig hfl;
  DataConfig data;
  SweepAxis sweep;
};

// Shipped defaults: the three-population instance with gamma = 100/300/500,
// s = 2/4/6, c = m = 10/30/50, d_z = 3000; J = 50 workers, N = 3 edges,
// alpha = beta = 0.001.
ExperimentConfig default_config();

// Structured key/value text with [game] / [hfl] / [data] / [sweep] sections.
// Unknown keys, type mismatches and invariant violations raise ConfigError
// naming the key and line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// FNV-1a over the canonicalized (section, key, value) set: stable under key
// reordering and whitespace changes.
std::string config_hash(const std::string& text);

// Applies one sweep-axis value (e.g. "gamma_1", "kappa1") to a config copy.
void apply_sweep_value(ExperimentConfig& cfg, const std::string& axis, double value);
// Validates that the axis name exists for this config.
void check_sweep_axis(const ExperimentConfig& cfg, const std::string& axis);

}  // namespace hflsim
