#include "hflsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hflsim/rng.hpp"

namespace hflsim {

std::string to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::Boundary: return "boundary";
    case EquilibriumKind::Interior: return "interior";
    case EquilibriumKind::MixedRows: return "mixed-rows";
  }
  return "unknown";
}

double utility_partial(size_t z, size_t n, size_t v, const PopulationState& state,
                       const GameConfig& cfg) {
  if (z >= cfg.num_populations()) throw std::invalid_argument("population index out of range");
  if (n >= cfg.num_servers() || v >= cfg.num_servers())
    throw std::invalid_argument("server index out of range");
  for (size_t k = 0; k < state.cols(); ++k)
    if (state.at(z, k) <= 0.0)
      throw std::invalid_argument("utility_partial requires a strictly interior row");
  if (v != n) return 0.0;
  double load = 0.0;
  for (size_t p = 0; p < state.rows(); ++p)
    load += cfg.populations[p].data_quantity * state.at(p, n);
  if (load <= 0.0) throw std::domain_error("zero column load");
  double d = cfg.populations[z].data_quantity;
  return -cfg.servers[n].reward_pool * d * d / (load * load);
}

BoundednessReport certify_boundedness(const GameConfig& cfg, size_t n_samples, uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  cfg.validate();
  auto rng = make_rng(seed);
  const size_t Z = cfg.num_populations(), N = cfg.num_servers();
  const double h = 1e-6;
  BoundednessReport report;
  report.samples = n_samples;
  for (size_t s = 0; s < n_samples; ++s) {
    PopulationState x(Z, N);
    for (size_t z = 0; z < Z; ++z) {
      auto row = sample_simplex(rng, N);
      for (size_t n = 0; n < N; ++n) x.at(z, n) = row[n];
    }
    for (size_t z = 0; z < Z; ++z)
      for (size_t v = 0; v < N; ++v) {
        PopulationState xp = x, xm = x;
        xp.at(z, v) += h;
        xm.at(z, v) -= h;
        auto fp = replicator_rhs(xp, cfg);
        auto fm = replicator_rhs(xm, cfg);
        for (size_t n = 0; n < N; ++n) {
          double df = (fp[z * N + n] - fm[z * N + n]) / (2.0 * h);
          report.max_abs_partial = std::max(report.max_abs_partial, std::abs(df));
        }
      }
  }
  return report;
}

namespace {

double state_inf_dist(const PopulationState& a, const PopulationState& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i)
    d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

}  // namespace

PhasePortrait phase_portrait(const GameConfig& cfg, const std::vector<PopulationState>& inits,
                             double uniqueness_tol) {
  if (inits.size() < 2) throw std::invalid_argument("need at least 2 initial states");
  PhasePortrait p;
  p.inits = inits;
  p.all_converged = true;
  for (const auto& init : inits) {
    auto run = run_to_equilibrium(cfg, init);
    if (run.status != RunStatus::Converged) p.all_converged = false;
    p.endpoints.push_back(run.final_state);
    p.trajectories.push_back(std::move(run.trajectory));
  }
  for (size_t i = 0; i < p.endpoints.size(); ++i)
    for (size_t j = 0; j < i; ++j)
      p.max_endpoint_spread =
          std::max(p.max_endpoint_spread, state_inf_dist(p.endpoints[i], p.endpoints[j]));
  p.inconclusive = !p.all_converged;
  p.unique_certified = p.all_converged && p.max_endpoint_spread < uniqueness_tol;
  return p;
}

PhasePortrait phase_portrait(const GameConfig& cfg, size_t n_inits, uint64_t seed,
                             double uniqueness_tol) {
  std::vector<PopulationState> inits;
  inits.reserve(n_inits);
  for (size_t i = 0; i < n_inits; ++i)
    inits.push_back(random_state(cfg, split_seed(seed, i)));
  return phase_portrait(cfg, inits, uniqueness_tol);
}

LyapunovReport lyapunov_check(const Trajectory& traj, const PopulationState& eq, double slack) {
  if (traj.size() < 2) throw std::invalid_argument("trajectory has fewer than 2 records");
  LyapunovReport report;
  const size_t E = eq.data().size();
  std::vector<double> g(traj.size(), 0.0);
  for (size_t t = 0; t < traj.size(); ++t) {
    double sum = 0.0;
    for (size_t i = 0; i < E; ++i) {
      double d = eq.data()[i] - traj.states[t].data()[i];
      sum += d * d;
    }
    g[t] = sum;
  }
  report.monotone = true;
  for (size_t t = 1; t < g.size(); ++t) {
    double rise = g[t] - g[t - 1];
    report.max_increase = std::max(report.max_increase, rise);
    if (rise > slack) report.monotone = false;
  }
  // Per-entry diagnostic: count coordinates whose own (x* - x)^2 ever rises.
  for (size_t i = 0; i < E; ++i) {
    bool mono = true;
    double prev = 0.0;
    for (size_t t = 0; t < traj.size(); ++t) {
      double d = eq.data()[i] - traj.states[t].data()[i];
      double gi = d * d;
      if (t > 0 && gi - prev > slack) mono = false;
      prev = gi;
    }
    if (!mono) ++report.nonmonotone_entries;
  }
  return report;
}

EquilibriumKind classify(const PopulationState& eq, double share_floor) {
  eq.require_valid();
  bool all_vertex = true, all_interior = true;
  for (size_t z = 0; z < eq.rows(); ++z) {
    bool row_vertex = false;
    for (size_t n = 0; n < eq.cols(); ++n) {
      double v = eq.at(z, n);
      if (v >= 1.0 - share_floor) row_vertex = true;
      if (!(v > share_floor && v < 1.0 - share_floor)) all_interior = false;
    }
    if (!row_vertex) all_vertex = false;
  }
  if (all_vertex) return EquilibriumKind::Boundary;
  if (all_interior) return EquilibriumKind::Interior;
  return EquilibriumKind::MixedRows;
}

EquilibriumReport equilibrium_report(const EquilibriumRun& run, const GameConfig& cfg) {
  EquilibriumReport report;
  report.state = run.final_state;
  report.kind = classify(run.final_state, cfg.share_floor);
  report.residual = run.last_residual;
  report.utility_gap = run.utility_gap;
  report.lyapunov_monotone =
      run.trajectory.size() >= 2 &&
      lyapunov_check(run.trajectory, run.final_state).monotone;
  return report;
}

}  // namespace hflsim
