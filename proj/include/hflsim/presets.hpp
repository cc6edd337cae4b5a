#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hflsim/config.hpp"

namespace hflsim {

inline constexpr const char* kCodeVersion = "hflsim 0.1.0";

struct PresetContext {
  std::string out_dir = "out";
  uint64_t master_seed = 42;
  size_t jobs = 1;
  std::string data_root;  // empty: resolve via config/env
};

struct PresetResult {
  int exit_code = 0;  // 0 ok, 3 non-convergence/divergence
  std::vector<std::string> files;
  std::string notes;
};

std::vector<std::string> preset_names();

// The two-population phase-plane instance (d = 2000/4000, s = 2/4) and the
// three-population instance (gamma = 100/300/500, s = 2/4/6, c = m =
// 10/30/50, d_z = 3000) shared by presets, tests, and the acceptance suite.
GameConfig fig2_instance();
GameConfig threepop_instance();
// The ten phase-plane starts: (0.1, 0.1), (0.6, 0.9), plus eight seeded
// interior states.
std::vector<PopulationState> fig2_initial_states(const GameConfig& cfg, uint64_t seed);

// The parameter grid a preset will execute, e.g. fig9's (kappa1, kappa2)
// divisor pairs; lets callers inspect plans without running them.
std::vector<std::vector<double>> preset_plan(const std::string& name);

PresetResult run_preset(const std::string& name, const PresetContext& ctx);

// Config-file driven execution (game | phase | hfl | sweep modes).
PresetResult run_experiment(const ExperimentConfig& cfg, const std::string& config_text,
                            const PresetContext& ctx);

// Writes (t, x_p<z>_s<n>..., residual) rows.
void write_trajectory_csv(const Trajectory& traj, size_t populations, size_t servers,
                          const std::string& path);

}  // namespace hflsim
