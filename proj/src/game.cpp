#include "hflsim/game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hflsim/rng.hpp"

namespace hflsim {

double GameConfig::resolved_utility_eq_tol() const {
  if (utility_eq_tol > 0.0) return utility_eq_tol;
  double gmax = 0.0;
  for (const auto& s : servers) gmax = std::max(gmax, s.reward_pool);
  return 1e-3 * gmax;
}

void GameConfig::validate() const {
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("alpha/beta must be >= 0");
  if (delta <= 0.0) throw std::invalid_argument("delta must be > 0");
  if (dt <= 0.0) throw std::invalid_argument("dt must be > 0");
  if (eq_tol <= 0.0) throw std::invalid_argument("eq_tol must be > 0");
  if (populations.empty()) throw std::invalid_argument("need at least 1 population");
  if (servers.size() < 2) throw std::invalid_argument("need at least 2 servers");
  for (const auto& p : populations) {
    if (p.data_quantity <= 0.0) throw std::invalid_argument("d_z must be > 0");
    if (p.compute_cost < 0.0 || p.comm_cost < 0.0)
      throw std::invalid_argument("c_z/m_z must be >= 0");
  }
  for (const auto& s : servers) {
    if (s.reward_pool <= 0.0) throw std::invalid_argument("gamma_n must be > 0");
    if (s.synth_cost < 0.0) throw std::invalid_argument("s_n must be >= 0");
  }
}

bool PopulationState::valid(double tol) const {
  for (size_t z = 0; z < rows_; ++z) {
    double sum = 0.0;
    for (size_t n = 0; n < cols_; ++n) {
      double v = at(z, n);
      if (!(v >= 0.0 && v <= 1.0)) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return rows_ > 0 && cols_ > 0;
}

void PopulationState::require_valid(double tol) const {
  if (!valid(tol)) throw std::invalid_argument("population state violates simplex invariants");
}

namespace {

void check_indices(size_t z, size_t n, const GameConfig& cfg) {
  if (z >= cfg.num_populations()) throw std::invalid_argument("population index out of range");
  if (n >= cfg.num_servers()) throw std::invalid_argument("server index out of range");
}

// Column loads L_n = sum_z d_z x_n^(z).
std::vector<double> column_loads(const PopulationState& x, const GameConfig& cfg) {
  std::vector<double> load(cfg.num_servers(), 0.0);
  for (size_t z = 0; z < x.rows(); ++z)
    for (size_t n = 0; n < x.cols(); ++n)
      load[n] += cfg.populations[z].data_quantity * x.at(z, n);
  return load;
}

double utility_from_load(size_t z, size_t n, double load_n, const GameConfig& cfg) {
  const auto& pop = cfg.populations[z];
  const auto& srv = cfg.servers[n];
  double reward = load_n > 0.0 ? srv.reward_pool * pop.data_quantity / load_n : 0.0;
  return reward - cfg.alpha * (srv.synth_cost + pop.compute_cost) - cfg.beta * pop.comm_cost;
}

// Z x N utility matrix, row-major.
std::vector<double> utility_matrix(const PopulationState& x, const GameConfig& cfg) {
  auto load = column_loads(x, cfg);
  std::vector<double> u(x.rows() * x.cols());
  for (size_t z = 0; z < x.rows(); ++z)
    for (size_t n = 0; n < x.cols(); ++n)
      u[z * x.cols() + n] = utility_from_load(z, n, load[n], cfg);
  return u;
}

std::vector<double> row_averages(const std::vector<double>& u, const PopulationState& x) {
  std::vector<double> avg(x.rows(), 0.0);
  for (size_t z = 0; z < x.rows(); ++z)
    for (size_t n = 0; n < x.cols(); ++n)
      avg[z] += u[z * x.cols() + n] * x.at(z, n);
  return avg;
}

std::vector<double> rhs_from(const std::vector<double>& u, const std::vector<double>& avg,
                             const PopulationState& x, const GameConfig& cfg) {
  std::vector<double> f(x.rows() * x.cols());
  for (size_t z = 0; z < x.rows(); ++z)
    for (size_t n = 0; n < x.cols(); ++n) {
      size_t i = z * x.cols() + n;
      f[i] = cfg.delta * x.at(z, n) * (u[i] - avg[z]);
    }
  return f;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

// Max |u_n - u_n'| over supported pairs (x > share_floor) within each row.
double within_support_gap(const std::vector<double>& u, const PopulationState& x,
                          const GameConfig& cfg) {
  double gap = 0.0;
  for (size_t z = 0; z < x.rows(); ++z) {
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (size_t n = 0; n < x.cols(); ++n) {
      if (x.at(z, n) <= cfg.share_floor) continue;
      double v = u[z * x.cols() + n];
      if (!any) {
        lo = hi = v;
        any = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (any) gap = std::max(gap, hi - lo);
  }
  return gap;
}

}  // namespace

double utility(size_t z, size_t n, const PopulationState& state, const GameConfig& cfg) {
  check_indices(z, n, cfg);
  auto load = column_loads(state, cfg);
  return utility_from_load(z, n, load[n], cfg);
}

double average_utility(size_t z, const PopulationState& state, const GameConfig& cfg) {
  check_indices(z, 0, cfg);
  auto u = utility_matrix(state, cfg);
  double avg = 0.0;
  for (size_t n = 0; n < state.cols(); ++n)
    avg += u[z * state.cols() + n] * state.at(z, n);
  return avg;
}

std::vector<double> replicator_rhs(const PopulationState& state, const GameConfig& cfg) {
  auto u = utility_matrix(state, cfg);
  auto avg = row_averages(u, state);
  return rhs_from(u, avg, state, cfg);
}

PopulationState euler_step(const PopulationState& state, const GameConfig& cfg) {
  auto f = replicator_rhs(state, cfg);
  PopulationState next(state.rows(), state.cols());
  for (size_t z = 0; z < state.rows(); ++z) {
    double sum = 0.0;
    for (size_t n = 0; n < state.cols(); ++n) {
      double v = state.at(z, n) + cfg.dt * f[z * state.cols() + n];
      v = std::clamp(v, 0.0, 1.0);
      next.at(z, n) = v;
      sum += v;
    }
    for (size_t n = 0; n < state.cols(); ++n) next.at(z, n) /= sum;
  }
  return next;
}

EquilibriumRun run_to_equilibrium(const GameConfig& cfg, const PopulationState& init) {
  cfg.validate();
  init.require_valid();
  if (init.rows() != cfg.num_populations() || init.cols() != cfg.num_servers())
    throw std::invalid_argument("state shape does not match config");

  // dense early records, thinned tail; keeps fast runs fully resolved and
  // bounds memory for long ones
  uint64_t every = cfg.record_every;
  if (every == 0) every = std::max<uint64_t>(1, cfg.max_steps / 20000);
  const uint64_t dense_until = cfg.record_every ? 0 : 10000;

  EquilibriumRun run;
  PopulationState x = init;

  auto record = [&](uint64_t step, const std::vector<double>& u,
                    const std::vector<double>& avg, double res) {
    run.trajectory.times.push_back(static_cast<double>(step) * cfg.dt);
    run.trajectory.states.push_back(x);
    run.trajectory.utilities.push_back(u);
    run.trajectory.avg_utilities.push_back(avg);
    run.trajectory.residuals.push_back(res);
  };

  for (uint64_t step = 0;; ++step) {
    auto u = utility_matrix(x, cfg);
    auto avg = row_averages(u, x);
    auto f = rhs_from(u, avg, x, cfg);
    double res = max_abs(f);
    if (res < cfg.eq_tol || step >= cfg.max_steps || step < dense_until ||
        step % every == 0)
      record(step, u, avg, res);
    if (res < cfg.eq_tol) {
      run.status = RunStatus::Converged;
      run.steps = step;
      run.last_residual = res;
      run.utility_gap = within_support_gap(u, x, cfg);
      break;
    }
    if (step >= cfg.max_steps) {
      run.status = RunStatus::NoConvergence;
      run.steps = step;
      run.last_residual = res;
      run.utility_gap = within_support_gap(u, x, cfg);
      break;
    }
    // Euler step reusing the already-computed rhs.
    for (size_t z = 0; z < x.rows(); ++z) {
      double sum = 0.0;
      for (size_t n = 0; n < x.cols(); ++n) {
        double v = x.at(z, n) + cfg.dt * f[z * x.cols() + n];
        v = std::clamp(v, 0.0, 1.0);
        x.at(z, n) = v;
        sum += v;
      }
      for (size_t n = 0; n < x.cols(); ++n) x.at(z, n) /= sum;
    }
  }
  run.final_state = x;
  return run;
}

PopulationState uniform_state(const GameConfig& cfg) {
  PopulationState s(cfg.num_populations(), cfg.num_servers());
  double v = 1.0 / static_cast<double>(cfg.num_servers());
  for (size_t z = 0; z < s.rows(); ++z)
    for (size_t n = 0; n < s.cols(); ++n) s.at(z, n) = v;
  return s;
}

PopulationState random_state(const GameConfig& cfg, uint64_t seed) {
  auto rng = make_rng(seed);
  PopulationState s(cfg.num_populations(), cfg.num_servers());
  for (size_t z = 0; z < s.rows(); ++z) {
    auto row = sample_simplex(rng, s.cols());
    for (size_t n = 0; n < s.cols(); ++n) s.at(z, n) = row[n];
  }
  return s;
}

PopulationState explicit_state(const GameConfig& cfg, const std::vector<double>& row_major) {
  if (row_major.size() != cfg.num_populations() * cfg.num_servers())
    throw std::invalid_argument("explicit state has wrong size");
  PopulationState s(cfg.num_populations(), cfg.num_servers());
  s.data() = row_major;
  s.require_valid();
  return s;
}

std::vector<double> aggregated_data(const PopulationState& state, const GameConfig& cfg) {
  return column_loads(state, cfg);
}

}  // namespace hflsim
