#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hflsim/game.hpp"

namespace hflsim {

enum class EquilibriumKind { Boundary, Interior, MixedRows };

std::string to_string(EquilibriumKind kind);

struct EquilibriumReport {
  PopulationState state;
  EquilibriumKind kind = EquilibriumKind::MixedRows;
  double residual = 0.0;
  bool lyapunov_monotone = false;
  double utility_gap = 0.0;
};

struct PhasePortrait {
  std::vector<PopulationState> inits;
  std::vector<Trajectory> trajectories;
  std::vector<PopulationState> endpoints;
  double max_endpoint_spread = 0.0;  // inf-norm over endpoint pairs
  bool all_converged = false;
  bool unique_certified = false;     // spread < uniqueness_tol and all converged
  bool inconclusive = false;         // any non-convergent run
};

struct BoundednessReport {
  double max_abs_partial = 0.0;      // empirical Lipschitz bound on the rhs
  size_t samples = 0;
};

struct LyapunovReport {
  bool monotone = false;             // summed G non-increasing within slack
  double max_increase = 0.0;         // worst step-to-step rise of summed G
  size_t nonmonotone_entries = 0;    // per-entry diagnostic count
};

// Closed-form d u_n^(z) / d x_v^(z) at an interior state. The reward term of
// u_n depends on x_v only through the column load, so the derivative is
// -gamma_n d_z^2 / L_n^2 on the diagonal and 0 for v != n.
double utility_partial(size_t z, size_t n, size_t v, const PopulationState& state,
                       const GameConfig& cfg);

// Samples interior states and finite-differences replicator_rhs to report an
// empirical bound on |df_n^(z)/dx_v^(z)|.
BoundednessReport certify_boundedness(const GameConfig& cfg, size_t n_samples, uint64_t seed);

// Multi-start convergence study; uniqueness certified iff all runs converge
// and the max pairwise endpoint spread is below uniqueness_tol.
PhasePortrait phase_portrait(const GameConfig& cfg, const std::vector<PopulationState>& inits,
                             double uniqueness_tol = 1e-3);
PhasePortrait phase_portrait(const GameConfig& cfg, size_t n_inits, uint64_t seed,
                             double uniqueness_tol = 1e-3);

// G(t) = sum_{z,n} (x*_{zn} - x_{zn}(t))^2 along the recorded trajectory,
// with x* the converged endpoint; monotone iff non-increasing within slack.
LyapunovReport lyapunov_check(const Trajectory& traj, const PopulationState& eq,
                              double slack = 1e-9);

EquilibriumKind classify(const PopulationState& eq, double share_floor = 1e-4);

EquilibriumReport equilibrium_report(const EquilibriumRun& run, const GameConfig& cfg);

}  // namespace hflsim
