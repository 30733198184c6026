#pragma once

// Drift-implicit, control/noise-explicit Euler for
//   dX = (A(t,X) + B(t,X)·v_t) dt + ε B(t,X) dW_t
// covering the small-noise SDE (v = 0), the controlled SDE, the skeleton
// equation (ε = 0) and the Galerkin-projected SDE (noise through P_n).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mldp/gelfand.hpp"
#include "mldp/operators.hpp"

namespace mldp {

struct SolverConfig {
  double T = 1.0;
  int n_steps = 100;
  double picard_tol = 1e-10;
  int picard_max_iters = 200;
  double damping = 0.5;
  bool newton_fallback = true;

  double dt() const { return T / n_steps; }
  void validate() const;
};

/// Piecewise-constant U-valued control, one row per time interval.
struct ControlPath {
  std::vector<double> time_grid;  // n_intervals + 1 points
  std::size_t modes = 0;
  std::vector<double> values;     // row-major n_intervals × modes

  static ControlPath zeros(const SolverConfig& cfg, std::size_t modes);

  std::size_t n_intervals() const { return time_grid.empty() ? 0 : time_grid.size() - 1; }
  std::span<const double> row(std::size_t k) const {
    return std::span<const double>(values).subspan(k * modes, modes);
  }
  std::span<double> row(std::size_t k) { return std::span<double>(values).subspan(k * modes, modes); }
  double dt(std::size_t k) const { return time_grid[k + 1] - time_grid[k]; }
  /// ½ Σ_k dt ‖φ_k‖²
  double energy() const;
};

/// Brownian increments ΔW_k ~ N(0, dt·I_m), reproducible from (seed, dims).
struct NoiseDraw {
  std::uint64_t seed = 0;
  int n_steps = 0;
  std::size_t modes = 0;
  std::vector<double> increments;  // row-major n_steps × modes

  static NoiseDraw generate(std::uint64_t seed, const SolverConfig& cfg, std::size_t modes);
  std::span<const double> row(std::size_t k) const {
    return std::span<const double>(increments).subspan(k * modes, modes);
  }
};

struct StepStats {
  long picard_iterations = 0;
  long newton_iterations = 0;
  long newton_solves = 0;
  long direct_solves = 0;  // linear drifts: one cached tridiagonal solve per step
};

/// Reusable integrator with preallocated workspace. Not thread-safe; use one
/// per worker.
class Stepper {
 public:
  Stepper(TriplePtr triple, const DriftSpec& drift, const NoiseSpec& noise, const SolverConfig& cfg);

  /// Solves x − dt·A(t_next, x) = rhs. Linear drifts use a cached
  /// factorization; otherwise Picard starts from `guess`.
  void implicit_solve(double t_next, std::span<const double> rhs, std::span<const double> guess,
                      std::span<double> out);

  /// One scheme step from interval k. Empty control/dW skip that term;
  /// galerkin_n < dim projects the noise term onto the first galerkin_n modes.
  void step(std::span<const double> x, std::size_t k, double eps, std::span<const double> control_row,
            std::span<const double> dW, std::size_t galerkin_n, std::span<double> out);

  /// Integrates the full horizon. With keep_path, `states` receives
  /// (n_steps + 1) × dim values; otherwise only the terminal state.
  void integrate(std::span<const double> x0, double eps, const ControlPath* control,
                 std::span<const double> increments, std::size_t galerkin_n, bool keep_path,
                 std::vector<double>& states);

  const StepStats& stats() const { return stats_; }
  const DiscreteTriple& triple() const { return *triple_; }
  const SolverConfig& config() const { return cfg_; }

 private:
  bool newton(double t_next, std::span<const double> rhs, std::span<double> x, double& residual);
  double residual_norm(double t_next, std::span<const double> rhs, std::span<const double> x);

  TriplePtr triple_;
  DriftSpec drift_;
  NoiseSpec noise_;
  SolverConfig cfg_;
  bool prefer_newton_ = false;
  bool linear_ = false;
  // Thomas factors of I − dt·A for linear drifts
  std::vector<double> lin_lower_, lin_upper_, lin_inv_pivot_;
  // columns of B for noise that depends on neither state nor time
  bool noise_fixed_ = false;
  std::vector<double> noise_columns_;

  void apply_noise(double t, std::span<const double> x, std::span<const double> direction, std::span<double> out);
  StepStats stats_;
  std::vector<double> a_, y_, r_, delta_, trial_, tmp_, noise_term_, buf0_, buf1_;
};

StateVector implicit_step(const StateVector& state, double t, double dt, const DriftSpec& drift,
                          const SolverConfig& cfg, const StateVector* initial_guess = nullptr);

PathRecord solve_skeleton(const StateVector& x0, const ControlPath& control, const DriftSpec& drift,
                          const NoiseSpec& noise, const SolverConfig& cfg);

/// control = nullptr runs the uncontrolled equation; draw may be null only when eps == 0.
PathRecord simulate(const StateVector& x0, double eps, const ControlPath* control, const DriftSpec& drift,
                    const NoiseSpec& noise, const SolverConfig& cfg, const NoiseDraw* draw);

PathRecord galerkin_simulate(std::size_t n, const StateVector& x0, double eps, const DriftSpec& drift,
                             const NoiseSpec& noise, const SolverConfig& cfg, const NoiseDraw* draw);

}  // namespace mldp
