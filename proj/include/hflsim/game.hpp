#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hflsim {

// One population of FL workers: identical data quantity and resource costs.
struct PopulationSpec {
  double data_quantity = 0.0;    // d_z, samples per worker, > 0
  double compute_cost = 0.0;     // c_z, local-dataset training resources, >= 0
  double comm_cost = 0.0;        // m_z, communication resources, >= 0
};

// One edge server: reward pool and the extra compute its synthetic set needs.
struct EdgeServerSpec {
  double reward_pool = 0.0;      // gamma_n, > 0
  double synth_cost = 0.0;       // s_n, >= 0
};

struct GameConfig {
  double alpha = 0.001;          // unit computation cost
  double beta = 0.001;           // unit communication cost
  double delta = 0.1;            // strategy adaptation rate, > 0
  double dt = 0.01;              // Euler step size
  uint64_t max_steps = 1'000'000;
  double eq_tol = 1e-8;          // residual threshold on max |xdot|
  double share_floor = 1e-4;     // "supported strategy" cutoff
  double utility_eq_tol = 0.0;   // 0 -> auto: 1e-3 * max gamma
  uint64_t record_every = 0;     // trajectory thinning; 0 -> auto
  std::vector<PopulationSpec> populations;
  std::vector<EdgeServerSpec> servers;
  uint64_t rng_seed = 0;

  size_t num_populations() const { return populations.size(); }
  size_t num_servers() const { return servers.size(); }
  double resolved_utility_eq_tol() const;
  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

// Z x N share matrix; each row lives on the probability simplex.
class PopulationState {
 public:
  PopulationState() = default;
  PopulationState(size_t populations, size_t servers)
      : rows_(populations), cols_(servers), x_(populations * servers, 0.0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  double& at(size_t z, size_t n) { return x_[z * cols_ + n]; }
  double at(size_t z, size_t n) const { return x_[z * cols_ + n]; }
  const std::vector<double>& data() const { return x_; }
  std::vector<double>& data() { return x_; }

  // Entries in [0,1], every row sums to 1 within tol.
  bool valid(double tol = 1e-9) const;
  void require_valid(double tol = 1e-9) const;

  bool operator==(const PopulationState& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && x_ == o.x_;
  }

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<double> x_;
};

// Recorded time series of one game run (thinned to record_every steps).
struct Trajectory {
  std::vector<double> times;
  std::vector<PopulationState> states;
  std::vector<std::vector<double>> utilities;      // Z*N row-major per record
  std::vector<std::vector<double>> avg_utilities;  // Z per record
  std::vector<double> residuals;                   // max |xdot| per record
  size_t size() const { return times.size(); }
};

enum class RunStatus { Converged, NoConvergence };

struct EquilibriumRun {
  Trajectory trajectory;
  PopulationState final_state;
  RunStatus status = RunStatus::NoConvergence;
  uint64_t steps = 0;
  double last_residual = 0.0;
  // Max within-support utility spread over populations at the final state.
  double utility_gap = 0.0;
};

// Net utility of a population-z worker choosing server n in state x:
//   gamma_n * d_z / sum_z' d_z' x_n^(z')  -  alpha (s_n + c_z)  -  beta m_z
// The reward term is the worker's per-capita cut of the pool; it is 0 when
// server n holds no mass at all (empty server pays nothing).
double utility(size_t z, size_t n, const PopulationState& state, const GameConfig& cfg);

// ubar^(z) = sum_n u_n^(z) x_n^(z)
double average_utility(size_t z, const PopulationState& state, const GameConfig& cfg);

// xdot_n^(z) = delta x_n^(z) (u_n^(z) - ubar^(z)); rows sum to 0.
std::vector<double> replicator_rhs(const PopulationState& state, const GameConfig& cfg);

// One explicit-Euler step with clamp to [0,1] and row renormalization.
PopulationState euler_step(const PopulationState& state, const GameConfig& cfg);

// Iterate euler_step until max |xdot| < eq_tol or max_steps.
EquilibriumRun run_to_equilibrium(const GameConfig& cfg, const PopulationState& init);

PopulationState uniform_state(const GameConfig& cfg);
PopulationState random_state(const GameConfig& cfg, uint64_t seed);
// Validates the given matrix against the simplex invariants.
PopulationState explicit_state(const GameConfig& cfg, const std::vector<double>& row_major);

// sum_z d_z x_n^(z) for each server: the aggregated data quantities.
std::vector<double> aggregated_data(const PopulationState& state, const GameConfig& cfg);

}  // namespace hflsim
