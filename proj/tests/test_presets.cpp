#include <doctest.h>

#include <filesystem>

#include "hflsim/csv.hpp"
#include "hflsim/presets.hpp"

using namespace hflsim;
namespace fs = std::filesystem;

TEST_CASE("preset catalogue covers every figure scenario") {
  auto names = preset_names();
  CHECK(names.size() == 9);
  CHECK(std::find(names.begin(), names.end(), "fig2-phaseplane") != names.end());
  CHECK(std::find(names.begin(), names.end(), "fig10-kappa2-sweep") != names.end());
}

TEST_CASE("unknown preset error lists the alternatives") {
  PresetContext ctx;
  CHECK_THROWS_WITH_AS(run_preset("fig99", ctx), doctest::Contains("fig2-phaseplane"),
                       ConfigError);
}

TEST_CASE("fig9 plan enumerates exactly the divisor pairs of 60") {
  auto plan = preset_plan("fig9-kappa-fixed-product");
  std::vector<std::pair<int, int>> expected;
  for (int k1 = 1; k1 <= 60; ++k1)
    if (60 % k1 == 0) expected.push_back({k1, 60 / k1});
  REQUIRE(plan.size() == expected.size());
  for (size_t i = 0; i < plan.size(); ++i) {
    CHECK(int(plan[i][0]) == expected[i].first);
    CHECK(int(plan[i][1]) == expected[i].second);
    CHECK(int(plan[i][0]) * int(plan[i][1]) == 60);
  }
  CHECK(plan.size() == 12);
}

TEST_CASE("fig8 plan sweeps the synthetic fractions 0 through 25 percent") {
  auto plan = preset_plan("fig8-synthetic-sweep");
  std::vector<double> expected = {0.0, 0.05, 0.10, 0.15, 0.20, 0.25};
  REQUIRE(plan.size() == expected.size());
  for (size_t i = 0; i < plan.size(); ++i) CHECK(plan[i][0] == expected[i]);
}

TEST_CASE("fig5/fig6 plans cover the parameter ranges") {
  CHECK(preset_plan("fig5-rewardpool").size() == 9);
  CHECK(preset_plan("fig5-rewardpool").front()[0] == 100);
  CHECK(preset_plan("fig5-rewardpool").back()[0] == 900);
  CHECK(preset_plan("fig6-computationcost").size() == 5);
}

TEST_CASE("run_experiment: game mode writes trajectory, report, and manifest") {
  auto cfg = parse_config(
      "mode = game\ninit = uniform\n[game]\n"
      "populations = 3000:10:10\nservers = 100:2, 100:2\n");
  PresetContext ctx;
  ctx.out_dir = (fs::temp_directory_path() / "hflsim_game_mode").string();
  ctx.master_seed = 7;
  auto res = run_experiment(cfg, "", ctx);
  CHECK(res.exit_code == 0);
  auto eq = read_csv(ctx.out_dir + "/equilibrium.csv");
  bool converged = false;
  for (const auto& row : eq.rows)
    if (row[0] == "status" && row[1] == "converged") converged = true;
  CHECK(converged);
  auto traj = read_csv(ctx.out_dir + "/trajectory.csv");
  CHECK(traj.header.front() == "t");
  CHECK(traj.header.back() == "residual");
  CHECK(fs::exists(ctx.out_dir + "/manifest.csv"));
}
