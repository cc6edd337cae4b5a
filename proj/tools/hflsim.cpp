// Command-line front end: config-driven runs and the figure presets.
// Exit codes: 0 success, 2 config error, 3 non-convergence/divergence, 4 I/O.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hflsim/config.hpp"
#include "hflsim/presets.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hflsim: evolutionary edge association and hierarchical FL simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute a config file or preset");
  std::string config_path, preset, out_dir = "out", data_root;
  uint64_t seed = 42;
  size_t jobs = 1;
  run->add_option("--config", config_path, "structured key/value config file");
  run->add_option("--preset", preset, "named experiment preset");
  run->add_option("--seed", seed, "master seed (per-run seeds derive from it)");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--jobs", jobs, "max concurrent runs in sweeps/portraits");
  run->add_option("--data-root", data_root, "dataset root (else $HFLSIM_DATA_ROOT)");

  auto* list = app.add_subcommand("presets", "list available presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& name : hflsim::preset_names()) std::cout << name << "\n";
      return 0;
    }
    hflsim::PresetContext ctx;
    ctx.out_dir = out_dir;
    ctx.master_seed = seed;
    ctx.jobs = jobs;
    ctx.data_root = data_root;

    hflsim::PresetResult res;
    if (!preset.empty()) {
      res = hflsim::run_preset(preset, ctx);
    } else if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) {
        std::cerr << "cannot open config file: " << config_path << "\n";
        return 4;
      }
      std::stringstream ss;
      ss << f.rdbuf();
      auto cfg = hflsim::parse_config(ss.str());
      if (!data_root.empty()) cfg.data.root = data_root;
      ctx.master_seed = seed;
      res = hflsim::run_experiment(cfg, ss.str(), ctx);
    } else {
      std::cerr << "run needs --config or --preset\n";
      return 2;
    }
    for (const auto& f : res.files) std::cout << f << "\n";
    if (!res.notes.empty()) std::cout << "# " << res.notes << "\n";
    return res.exit_code;
  } catch (const hflsim::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const hflsim::IdxError& e) {
    std::cerr << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 4;
  }
}
