#include "hflsim/presets.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>
#include <thread>

#include "hflsim/analysis.hpp"
#include "hflsim/csv.hpp"
#include "hflsim/rng.hpp"

namespace fs = std::filesystem;

namespace hflsim {

namespace {

// Independent runs may execute concurrently; results land in preassigned
// slots so output order never depends on scheduling.
void parallel_runs(size_t jobs, const std::vector<std::function<void()>>& tasks) {
  if (jobs <= 1 || tasks.size() <= 1) {
    for (const auto& t : tasks) t();
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  size_t n = std::min(jobs, tasks.size());
  std::exception_ptr first_error;
  std::mutex err_mu;
  for (size_t i = 0; i < n; ++i)
    pool.emplace_back([&] {
      for (;;) {
        size_t k = next.fetch_add(1);
        if (k >= tasks.size()) return;
        try {
          tasks[k]();
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct ManifestWriter {
  std::string preset, target, hash, notes, status = "ok";
  uint64_t seed = 0;
  std::vector<std::string> files;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  std::string write(const std::string& out_dir) {
    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string joined;
    for (const auto& f : files) joined += (joined.empty() ? "" : ";") + f;
    std::vector<std::vector<std::string>> rows = {
        {"preset", preset},       {"target", target},
        {"config_hash", hash},    {"master_seed", std::to_string(seed)},
        {"code_version", kCodeVersion}, {"wall_clock_s", fmt_double(wall)},
        {"status", status},       {"artifacts", joined},
        {"notes", notes}};
    std::string path = out_dir + "/manifest.csv";
    emit_csv(path, {"key", "value"}, rows);
    return path;
  }
};

std::string preset_config_text(const std::string& name, const PresetContext& ctx) {
  std::ostringstream ss;
  ss << "mode = preset\npreset = " << name << "\nmaster_seed = " << ctx.master_seed << "\n";
  return ss.str();
}

// Fig. 2 phase-plane coordinates (x_1^(1), x_1^(2)) lifted to a full state.
PopulationState fig2_point(const GameConfig& g, double a, double b) {
  return explicit_state(g, {a, 1.0 - a, b, 1.0 - b});
}

Dataset load_train(const std::string& root) {
  return load_idx(root + "/train-images-idx3-ubyte", root + "/train-labels-idx1-ubyte");
}
Dataset load_test(const std::string& root) {
  return load_idx(root + "/t10k-images-idx3-ubyte", root + "/t10k-labels-idx1-ubyte");
}

struct HflRunSpec {
  PartitionSpec part;
  HFLConfig hfl;
  size_t train_limit = 6000;
};

HflRunSpec desk_hfl_base() {
  HflRunSpec r;
  r.part.workers = 10;
  r.part.edges = 3;
  r.part.classes_per_worker = 1;
  r.part.edge_mode = EdgeMode::NonIid;
  r.part.synthetic_fraction = 0.0;
  r.part.pool_fraction = 0.1;
  r.part.noise_sigma = 0.1;
  r.hfl.kappa1 = 5;
  r.hfl.kappa2 = 2;
  r.hfl.iterations = 300;
  r.hfl.eta0 = 0.01;
  r.hfl.decay = 0.995;
  r.hfl.batch_size = 20;
  r.hfl.arch = Architecture{784, 32, 10};
  return r;
}

TrainTrace run_hfl_once(const Dataset& train, const Dataset& test, HflRunSpec spec,
                        uint64_t seed) {
  spec.part.rng_seed = split_seed(seed, 3);
  spec.hfl.rng_seed = split_seed(seed, 2);
  Dataset limited =
      spec.train_limit ? select_balanced_subset(train, spec.train_limit, split_seed(seed, 5))
                       : train;
  auto data = build_partition(std::move(limited), test, spec.part);
  return run_hfl(spec.hfl, data);
}

std::string num(double v) { return fmt_double(v); }

}  // namespace

GameConfig fig2_instance() {
  GameConfig g;
  g.populations = {{2000, 10, 10}, {4000, 10, 10}};
  g.servers = {{100, 2}, {300, 4}};
  g.delta = 0.1;
  g.dt = 0.02;
  g.eq_tol = 1e-8;
  g.max_steps = 20'000'000;
  return g;
}

GameConfig threepop_instance() {
  GameConfig g;
  g.populations = {{3000, 10, 10}, {3000, 30, 30}, {3000, 50, 50}};
  g.servers = {{100, 2}, {300, 4}, {500, 6}};
  g.delta = 0.1;
  g.dt = 0.005;
  g.eq_tol = 1e-8;
  g.max_steps = 5'000'000;
  return g;
}

std::vector<PopulationState> fig2_initial_states(const GameConfig& cfg, uint64_t seed) {
  std::vector<PopulationState> inits = {fig2_point(cfg, 0.1, 0.1), fig2_point(cfg, 0.6, 0.9)};
  for (size_t i = 0; i < 8; ++i) inits.push_back(random_state(cfg, split_seed(seed, i)));
  return inits;
}

void write_trajectory_csv(const Trajectory& traj, size_t populations, size_t servers,
                          const std::string& path) {
  std::vector<std::string> header = {"t"};
  for (size_t z = 0; z < populations; ++z)
    for (size_t n = 0; n < servers; ++n)
      header.push_back("x_p" + std::to_string(z + 1) + "_s" + std::to_string(n + 1));
  header.push_back("residual");
  std::vector<std::vector<std::string>> rows;
  for (size_t t = 0; t < traj.size(); ++t) {
    std::vector<std::string> row = {num(traj.times[t])};
    for (double v : traj.states[t].data()) row.push_back(num(v));
    row.push_back(num(traj.residuals[t]));
    rows.push_back(std::move(row));
  }
  emit_csv(path, header, rows);
}

std::vector<std::string> preset_names() {
  return {"fig2-phaseplane",  "fig3-populations",      "fig4-learningrate",
          "fig5-rewardpool",  "fig6-computationcost",  "fig7-noniid-accuracy",
          "fig8-synthetic-sweep", "fig9-kappa-fixed-product", "fig10-kappa2-sweep"};
}

std::vector<std::vector<double>> preset_plan(const std::string& name) {
  if (name == "fig4-learningrate") return {{0.001}, {0.01}, {0.1}};
  if (name == "fig5-rewardpool") {
    std::vector<std::vector<double>> plan;
    for (int g = 100; g <= 900; g += 100) plan.push_back({double(g)});
    return plan;
  }
  if (name == "fig6-computationcost") {
    std::vector<std::vector<double>> plan;
    for (int c = 10; c <= 50; c += 10) plan.push_back({double(c)});
    return plan;
  }
  if (name == "fig8-synthetic-sweep")
    return {{0.0}, {0.05}, {0.10}, {0.15}, {0.20}, {0.25}};
  if (name == "fig9-kappa-fixed-product") {
    std::vector<std::vector<double>> plan;
    for (uint32_t k1 = 1; k1 <= 60; ++k1)
      if (60 % k1 == 0) plan.push_back({double(k1), double(60 / k1)});
    return plan;
  }
  if (name == "fig10-kappa2-sweep") return {{1}, {2}, {4}, {6}, {12}};
  return {};
}

namespace {

PresetResult preset_fig2(const PresetContext& ctx, ManifestWriter& mf) {
  PresetResult res;
  GameConfig g = fig2_instance();
  auto inits = fig2_initial_states(g, ctx.master_seed);
  auto portrait = phase_portrait(g, inits);
  for (size_t i = 0; i < portrait.trajectories.size(); ++i) {
    const auto& traj = portrait.trajectories[i];
    std::vector<std::vector<std::string>> rows;
    for (size_t t = 0; t < traj.size(); ++t)
      rows.push_back({num(traj.times[t]), num(traj.states[t].at(0, 0)),
                      num(traj.states[t].at(1, 0))});
    std::string path = ctx.out_dir + "/phase_init" + std::to_string(i) + ".csv";
    emit_csv(path, {"t", "x_s1_p1", "x_s1_p2"}, rows);
    res.files.push_back(path);
  }
  std::vector<std::vector<std::string>> summary;
  for (size_t i = 0; i < portrait.endpoints.size(); ++i)
    summary.push_back({std::to_string(i), num(portrait.endpoints[i].at(0, 0)),
                       num(portrait.endpoints[i].at(1, 0))});
  std::string spath = ctx.out_dir + "/portrait.csv";
  emit_csv(spath, {"init", "x_s1_p1_end", "x_s1_p2_end"}, summary);
  res.files.push_back(spath);
  mf.notes = "endpoint_spread=" + num(portrait.max_endpoint_spread) +
             (portrait.unique_certified ? " unique" : " inconclusive");
  if (!portrait.all_converged) {
    res.exit_code = 3;
    mf.status = "no-convergence";
  }
  return res;
}

PresetResult preset_fig3(const PresetContext& ctx, ManifestWriter& mf) {
  PresetResult res;
  GameConfig g = threepop_instance();
  auto run = run_to_equilibrium(g, random_state(g, split_seed(ctx.master_seed, 0)));
  std::string tpath = ctx.out_dir + "/populations.csv";
  write_trajectory_csv(run.trajectory, 3, 3, tpath);
  res.files.push_back(tpath);

  auto report = equilibrium_report(run, g);
  auto agg = aggregated_data(run.final_state, g);
  std::vector<std::vector<std::string>> rows = {
      {"kind", to_string(report.kind)},
      {"residual", num(report.residual)},
      {"utility_gap", num(report.utility_gap)},
      {"lyapunov_monotone", report.lyapunov_monotone ? "true" : "false"},
      {"data_s1", num(agg[0])},
      {"data_s2", num(agg[1])},
      {"data_s3", num(agg[2])}};
  std::string rpath = ctx.out_dir + "/equilibrium.csv";
  emit_csv(rpath, {"key", "value"}, rows);
  res.files.push_back(rpath);

  // The per-population split at equilibrium is init-dependent (the fixed
  // points form a continuum); per-server aggregated data is not.
  std::ostringstream notes;
  notes << "pop2_share_s2=" << num(run.final_state.at(1, 1))
        << " pop3_shares=" << num(run.final_state.at(2, 0)) << "/"
        << num(run.final_state.at(2, 1)) << "/" << num(run.final_state.at(2, 2))
        << " reference=0.31/0.14/0.55; per-population splits are init-dependent,"
        << " aggregated per-server data is not";
  mf.notes = notes.str();
  if (run.status != RunStatus::Converged) {
    res.exit_code = 3;
    mf.status = "no-convergence";
  }
  return res;
}

PresetResult preset_fig4(const PresetContext& ctx, ManifestWriter& mf) {
  PresetResult res;
  auto plan = preset_plan("fig4-learningrate");
  auto init = random_state(threepop_instance(), split_seed(ctx.master_seed, 0));
  std::vector<EquilibriumRun> runs(plan.size());
  std::vector<std::function<void()>> tasks;
  for (size_t i = 0; i < plan.size(); ++i)
    tasks.push_back([&, i] {
      GameConfig g = threepop_instance();
      g.delta = plan[i][0];
      runs[i] = run_to_equilibrium(g, init);
    });
  parallel_runs(ctx.jobs, tasks);

  std::vector<std::vector<std::string>> summary;
  for (size_t i = 0; i < plan.size(); ++i) {
    const auto& traj = runs[i].trajectory;
    std::vector<std::vector<std::string>> rows;
    for (size_t t = 0; t < traj.size(); ++t)
      rows.push_back({num(traj.times[t]), num(traj.states[t].at(1, 0)),
                      num(traj.states[t].at(1, 1)), num(traj.states[t].at(1, 2))});
    std::string path = ctx.out_dir + "/learningrate_delta" + std::to_string(i) + ".csv";
    emit_csv(path, {"t", "x_p2_s1", "x_p2_s2", "x_p2_s3"}, rows);
    res.files.push_back(path);
    double drift = 0.0;
    for (size_t e = 0; e < runs[i].final_state.data().size(); ++e)
      drift = std::max(drift, std::abs(runs[i].final_state.data()[e] -
                                       runs.back().final_state.data()[e]));
    summary.push_back({num(plan[i][0]), std::to_string(runs[i].steps), num(drift),
                       runs[i].status == RunStatus::Converged ? "converged" : "no-convergence"});
    if (runs[i].status != RunStatus::Converged) res.exit_code = 3;
  }
  std::string spath = ctx.out_dir + "/learningrate_summary.csv";
  emit_csv(spath, {"delta", "steps", "endpoint_drift_vs_largest_delta", "status"}, summary);
  res.files.push_back(spath);
  if (res.exit_code) mf.status = "no-convergence";
  return res;
}

PresetResult preset_sweep_game(const PresetContext& ctx, ManifestWriter& mf,
                               const std::string& axis, const std::string& name) {
  PresetResult res;
  auto plan = preset_plan(name);
  auto init = random_state(threepop_instance(), split_seed(ctx.master_seed, 0));
  std::vector<EquilibriumRun> runs(plan.size());
  std::vector<std::function<void()>> tasks;
  for (size_t i = 0; i < plan.size(); ++i)
    tasks.push_back([&, i] {
      ExperimentConfig cfg;
      cfg.game = threepop_instance();
      apply_sweep_value(cfg, axis, plan[i][0]);
      runs[i] = run_to_equilibrium(cfg.game, init);
    });
  parallel_runs(ctx.jobs, tasks);

  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < plan.size(); ++i) {
    ExperimentConfig cfg;
    cfg.game = threepop_instance();
    apply_sweep_value(cfg, axis, plan[i][0]);
    auto agg = aggregated_data(runs[i].final_state, cfg.game);
    rows.push_back({num(plan[i][0]), num(agg[0]), num(agg[1]), num(agg[2]),
                    runs[i].status == RunStatus::Converged ? "converged" : "no-convergence"});
    if (runs[i].status != RunStatus::Converged) res.exit_code = 3;
  }
  std::string path = ctx.out_dir + "/" + axis + "_sweep.csv";
  emit_csv(path, {axis, "data_s1", "data_s2", "data_s3", "status"}, rows);
  res.files.push_back(path);
  if (res.exit_code) mf.status = "no-convergence";
  return res;
}

PresetResult preset_hfl_family(const std::string& name, const PresetContext& ctx,
                               ManifestWriter& mf) {
  PresetResult res;
  DataConfig dc;
  dc.root = ctx.data_root;
  Dataset train = load_train(dc.resolved_root());
  Dataset test = load_test(dc.resolved_root());

  struct Run {
    std::string tag;
    HflRunSpec spec;
  };
  std::vector<Run> runs;
  if (name == "fig7-noniid-accuracy") {
    for (int cpw : {0, 2, 1})
      for (EdgeMode mode : {EdgeMode::NonIid, EdgeMode::Iid}) {
        HflRunSpec s = desk_hfl_base();
        s.part.classes_per_worker = cpw;
        s.part.edge_mode = mode;
        std::string tag = (cpw == 0 ? "iid" : std::to_string(cpw) + "class");
        tag += mode == EdgeMode::Iid ? "_edgeiid" : "_edgenoniid";
        runs.push_back({tag, s});
      }
  } else if (name == "fig8-synthetic-sweep") {
    for (const auto& v : preset_plan(name)) {
      HflRunSpec s = desk_hfl_base();
      s.part.classes_per_worker = 1;
      s.part.synthetic_fraction = v[0];
      s.part.pool_fraction = 0.25;  // feasible up to rho = 0.25, same shards per run
      runs.push_back({"rho" + std::to_string(int(std::lround(v[0] * 100))), s});
    }
  } else if (name == "fig9-kappa-fixed-product") {
    for (const auto& v : preset_plan(name)) {
      HflRunSpec s = desk_hfl_base();
      s.part.synthetic_fraction = 0.05;
      s.hfl.kappa1 = uint32_t(v[0]);
      s.hfl.kappa2 = uint32_t(v[1]);
      runs.push_back({"k1_" + std::to_string(uint32_t(v[0])), s});
    }
  } else {  // fig10-kappa2-sweep
    for (const auto& v : preset_plan(name)) {
      HflRunSpec s = desk_hfl_base();
      s.part.synthetic_fraction = 0.05;
      s.hfl.kappa1 = 5;
      s.hfl.kappa2 = uint32_t(v[0]);
      runs.push_back({"k2_" + std::to_string(uint32_t(v[0])), s});
    }
  }

  std::vector<TrainTrace> traces(runs.size());
  std::vector<std::function<void()>> tasks;
  for (size_t i = 0; i < runs.size(); ++i)
    tasks.push_back([&, i] {
      traces[i] = run_hfl_once(train, test, runs[i].spec, split_seed(ctx.master_seed, 10 + i));
    });
  parallel_runs(ctx.jobs, tasks);

  std::vector<std::vector<std::string>> summary;
  for (size_t i = 0; i < runs.size(); ++i) {
    std::string path = ctx.out_dir + "/" + runs[i].tag + ".csv";
    write_trace_csv(traces[i], path);
    res.files.push_back(path);
    summary.push_back({runs[i].tag, std::to_string(runs[i].spec.hfl.kappa1),
                       std::to_string(runs[i].spec.hfl.kappa2),
                       num(runs[i].spec.part.synthetic_fraction),
                       num(traces[i].final_accuracy), num(traces[i].final_loss),
                       traces[i].status == HFLStatus::Finished ? "finished" : "diverged"});
    if (traces[i].status != HFLStatus::Finished) res.exit_code = 3;
  }
  std::string spath = ctx.out_dir + "/summary.csv";
  emit_csv(spath, {"run", "kappa1", "kappa2", "rho", "final_accuracy", "final_loss", "status"},
           summary);
  res.files.push_back(spath);
  if (res.exit_code) mf.status = "diverged";
  return res;
}

}  // namespace

PresetResult run_preset(const std::string& name, const PresetContext& ctx) {
  auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "'; available: " + known);
  }
  fs::create_directories(ctx.out_dir);

  ManifestWriter mf;
  mf.preset = name;
  mf.target = name.substr(0, name.find('-'));
  mf.seed = ctx.master_seed;
  mf.hash = config_hash(preset_config_text(name, ctx));

  PresetResult res;
  if (name == "fig2-phaseplane") res = preset_fig2(ctx, mf);
  else if (name == "fig3-populations") res = preset_fig3(ctx, mf);
  else if (name == "fig4-learningrate") res = preset_fig4(ctx, mf);
  else if (name == "fig5-rewardpool") res = preset_sweep_game(ctx, mf, "gamma_1", name);
  else if (name == "fig6-computationcost") res = preset_sweep_game(ctx, mf, "c_1", name);
  else res = preset_hfl_family(name, ctx, mf);

  mf.files = res.files;
  res.files.push_back(mf.write(ctx.out_dir));
  res.notes = mf.notes;
  return res;
}

PresetResult run_experiment(const ExperimentConfig& cfg_in, const std::string& config_text,
                            const PresetContext& ctx) {
  ExperimentConfig cfg = cfg_in;
  fs::create_directories(ctx.out_dir);
  ManifestWriter mf;
  mf.preset = "config";
  mf.target = "custom";
  mf.seed = ctx.master_seed;
  mf.hash = config_hash(config_text);
  PresetResult res;

  auto derive_sections = [&](ExperimentConfig& c, uint64_t seed) {
    if (c.game.rng_seed == 0) c.game.rng_seed = split_seed(seed, 1);
    if (c.hfl.rng_seed == 0) c.hfl.rng_seed = split_seed(seed, 2);
    if (c.data.spec.rng_seed == 0) c.data.spec.rng_seed = split_seed(seed, 3);
  };
  derive_sections(cfg, ctx.master_seed);

  auto initial_state = [&](const GameConfig& g) {
    return cfg.init == "uniform" ? uniform_state(g)
                                 : random_state(g, split_seed(ctx.master_seed, 4));
  };

  switch (cfg.mode) {
    case RunMode::Game: {
      auto run = run_to_equilibrium(cfg.game, initial_state(cfg.game));
      std::string tpath = ctx.out_dir + "/trajectory.csv";
      write_trajectory_csv(run.trajectory, cfg.game.num_populations(), cfg.game.num_servers(),
                           tpath);
      res.files.push_back(tpath);
      auto report = equilibrium_report(run, cfg.game);
      auto agg = aggregated_data(run.final_state, cfg.game);
      std::vector<std::vector<std::string>> rows = {
          {"status", run.status == RunStatus::Converged ? "converged" : "no-convergence"},
          {"steps", std::to_string(run.steps)},
          {"residual", fmt_double(report.residual)},
          {"kind", to_string(report.kind)},
          {"utility_gap", fmt_double(report.utility_gap)},
          {"lyapunov_monotone", report.lyapunov_monotone ? "true" : "false"}};
      for (size_t n = 0; n < agg.size(); ++n)
        rows.push_back({"data_s" + std::to_string(n + 1), fmt_double(agg[n])});
      std::string rpath = ctx.out_dir + "/equilibrium.csv";
      emit_csv(rpath, {"key", "value"}, rows);
      res.files.push_back(rpath);
      if (run.status != RunStatus::Converged) {
        res.exit_code = 3;
        mf.status = "no-convergence";
      }
      break;
    }
    case RunMode::Phase: {
      std::vector<PopulationState> inits;
      for (size_t i = 0; i < cfg.n_inits; ++i)
        inits.push_back(random_state(cfg.game, split_seed(ctx.master_seed, i)));
      auto portrait = phase_portrait(cfg.game, inits);
      for (size_t i = 0; i < portrait.trajectories.size(); ++i) {
        std::string path = ctx.out_dir + "/trajectory_init" + std::to_string(i) + ".csv";
        write_trajectory_csv(portrait.trajectories[i], cfg.game.num_populations(),
                             cfg.game.num_servers(), path);
        res.files.push_back(path);
      }
      std::vector<std::vector<std::string>> rows = {
          {"max_endpoint_spread", fmt_double(portrait.max_endpoint_spread)},
          {"all_converged", portrait.all_converged ? "true" : "false"},
          {"unique_certified", portrait.unique_certified ? "true" : "false"},
          {"inconclusive", portrait.inconclusive ? "true" : "false"}};
      std::string ppath = ctx.out_dir + "/portrait.csv";
      emit_csv(ppath, {"key", "value"}, rows);
      res.files.push_back(ppath);
      if (portrait.inconclusive) {
        res.exit_code = 3;
        mf.status = "inconclusive";
      }
      break;
    }
    case RunMode::Hfl: {
      std::string root = cfg.data.root.empty() ? cfg.data.resolved_root() : cfg.data.root;
      Dataset train = load_train(root);
      Dataset test = load_test(root);
      if (cfg.data.train_limit)
        train = select_balanced_subset(train, cfg.data.train_limit,
                                       split_seed(ctx.master_seed, 5));
      auto data = build_partition(std::move(train), std::move(test), cfg.data.spec);
      std::string ppath = ctx.out_dir + "/partition.csv";
      write_partition_manifest(data, ppath);
      res.files.push_back(ppath);
      auto trace = run_hfl(cfg.hfl, data);
      std::string tpath = ctx.out_dir + "/trace.csv";
      write_trace_csv(trace, tpath);
      res.files.push_back(tpath);
      if (trace.status != HFLStatus::Finished) {
        res.exit_code = 3;
        mf.status = "diverged at iteration " + std::to_string(trace.diverged_iteration);
      }
      break;
    }
    case RunMode::Sweep: {
      const auto& axis = cfg.sweep.parameter;
      bool game_axis = axis != "kappa1" && axis != "kappa2" && axis != "K" &&
                       axis != "eta0" && axis != "decay" && axis != "synthetic_fraction" &&
                       axis != "classes_per_worker" && axis != "train_limit";
      size_t n = cfg.sweep.values.size();
      std::vector<PresetResult> sub(n);
      std::vector<int> codes(n, 0);
      std::vector<std::vector<std::string>> summary(n);
      Dataset train, test;
      if (!game_axis) {
        std::string root = cfg.data.root.empty() ? cfg.data.resolved_root() : cfg.data.root;
        train = load_train(root);
        test = load_test(root);
      }
      auto init = game_axis ? initial_state(cfg.game) : PopulationState{};
      std::vector<std::function<void()>> tasks;
      for (size_t i = 0; i < n; ++i)
        tasks.push_back([&, i] {
          ExperimentConfig run_cfg = cfg;
          run_cfg.game.rng_seed = 0;
          run_cfg.hfl.rng_seed = 0;
          run_cfg.data.spec.rng_seed = 0;
          derive_sections(run_cfg, split_seed(ctx.master_seed, 100 + i));
          apply_sweep_value(run_cfg, axis, cfg.sweep.values[i]);
          std::string dir = ctx.out_dir + "/run_" + std::to_string(i);
          fs::create_directories(dir);
          if (game_axis) {
            auto run = run_to_equilibrium(run_cfg.game, init);
            write_trajectory_csv(run.trajectory, run_cfg.game.num_populations(),
                                 run_cfg.game.num_servers(), dir + "/trajectory.csv");
            sub[i].files.push_back(dir + "/trajectory.csv");
            auto agg = aggregated_data(run.final_state, run_cfg.game);
            std::vector<std::string> row = {fmt_double(cfg.sweep.values[i])};
            for (double a : agg) row.push_back(fmt_double(a));
            row.push_back(run.status == RunStatus::Converged ? "converged" : "no-convergence");
            summary[i] = row;
            codes[i] = run.status == RunStatus::Converged ? 0 : 3;
          } else {
            Dataset limited = run_cfg.data.train_limit
                                  ? select_balanced_subset(
                                        train, run_cfg.data.train_limit,
                                        split_seed(split_seed(ctx.master_seed, 100 + i), 5))
                                  : train;
            auto data = build_partition(std::move(limited), test, run_cfg.data.spec);
            auto trace = run_hfl(run_cfg.hfl, data);
            write_trace_csv(trace, dir + "/trace.csv");
            sub[i].files.push_back(dir + "/trace.csv");
            summary[i] = {fmt_double(cfg.sweep.values[i]), fmt_double(trace.final_accuracy),
                          fmt_double(trace.final_loss),
                          trace.status == HFLStatus::Finished ? "finished" : "diverged"};
            codes[i] = trace.status == HFLStatus::Finished ? 0 : 3;
          }
        });
      parallel_runs(ctx.jobs, tasks);
      std::vector<std::string> header = {axis};
      if (game_axis) {
        for (size_t s = 0; s < cfg.game.num_servers(); ++s)
          header.push_back("data_s" + std::to_string(s + 1));
        header.push_back("status");
      } else {
        header.insert(header.end(), {"final_accuracy", "final_loss", "status"});
      }
      std::string spath = ctx.out_dir + "/sweep_summary.csv";
      emit_csv(spath, header, summary);
      for (auto& s : sub)
        res.files.insert(res.files.end(), s.files.begin(), s.files.end());
      res.files.push_back(spath);
      for (int c : codes)
        if (c) {
          res.exit_code = 3;
          mf.status = "partial-failure";
        }
      break;
    }
  }
  mf.files = res.files;
  res.files.push_back(mf.write(ctx.out_dir));
  return res;
}

}  // namespace hflsim
