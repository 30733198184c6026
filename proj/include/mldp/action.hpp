#pragma once

// Discrete rate function: minimal control energy ½Σ dt‖φ_k‖² over
// piecewise-constant controls whose skeleton path lands in a target set.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mldp/evolution.hpp"
#include "mldp/gelfand.hpp"
#include "mldp/operators.hpp"

namespace mldp {

class WorkerPool;

enum class ConstraintKind { terminal_functional, terminal_state, path_target };
const char* to_string(ConstraintKind kind);
ConstraintKind constraint_kind_from_string(const std::string& s);

/// Target set A:
///   terminal_functional  ⟨g, z_T⟩_H ≥ threshold
///   terminal_state       ‖z_T − target_state‖_H ≤ tolerance
///   path_target          ρ(z, target_path) ≤ tolerance
struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::terminal_functional;
  std::vector<double> weights;  // g on interior nodes
  double threshold = 0.0;       // ±inf allowed for events (sure / empty)
  std::vector<double> target_state;
  PathRecord target_path;
  double tolerance = 0.0;

  bool needs_path() const { return kind == ConstraintKind::path_target; }
  /// Distance-like violation ≥ 0; zero iff the path lies in A.
  double violation(const PathRecord& path) const;
  /// Violation of a terminal-kind constraint from the terminal state alone.
  double terminal_violation(const DiscreteTriple& triple, std::span<const double> z_T) const;
};

/// ShapeError on dimension mismatch, ConfigError on non-finite data. With
/// allow_infinite the threshold may be ±inf.
void validate(const ConstraintSpec& c, const DiscreteTriple& triple, const SolverConfig& cfg,
              bool allow_infinite = false);

double control_energy(const ControlPath& control);

struct ObjectiveValue {
  double value = 0.0;      // energy + β·penalty
  double energy = 0.0;
  double penalty = 0.0;    // squared hinge of the violation
  double violation = 0.0;
  ControlPath gradient;    // ∂J/∂φ, same shape as the control
};

/// J(φ) = control_energy(φ) + β·max(0, violation)², gradient by discrete
/// adjoint through the implicit Euler recursion.
ObjectiveValue action_gradient(const ControlPath& control, const StateVector& x0, const ConstraintSpec& constraint,
                               double beta, const DriftSpec& drift, const NoiseSpec& noise, const SolverConfig& cfg);

struct OptimizerSettings {
  int n_starts = 4;  // zero control plus n_starts − 1 Gaussian starts
  double start_scale = 1.0;
  std::uint64_t seed = 1;
  int memory = 10;
  int max_iterations = 500;  // per penalty stage
  double gradient_tol = 1e-8;
  std::vector<double> betas{10.0, 1e2, 1e3, 1e4};
  double feasibility_tol = 1e-6;
  int restoration_iterations = 50;
  double fd_mismatch = 1e-2;
  std::vector<ControlPath> extra_starts;

  void validate() const;
};

struct StartRecord {
  double start_energy = 0.0;
  double value = std::numeric_limits<double>::infinity();  // inf when no feasible point was found
  bool feasible = false;
  double violation = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool used_fd_gradient = false;
  std::vector<double> violation_history;  // after each β stage
};

struct ActionResult {
  ControlPath minimizer;
  double value = 0.0;
  int iterations = 0;
  double gradient_norm_final = 0.0;
  std::vector<double> multi_start_values;
  bool converged = false;
  bool feasible = false;
  double violation = 0.0;
  int best_start = -1;
  bool starts_disagree = false;  // feasible starts differ by more than 1e-3 relative
  std::vector<StartRecord> starts;
};

ActionResult minimize_action(const ConstraintSpec& constraint, const StateVector& x0, const DriftSpec& drift,
                             const NoiseSpec& noise, const SolverConfig& cfg, const OptimizerSettings& opt = {},
                             const WorkerPool* pool = nullptr);

nlohmann::json to_json(const ActionResult& result);

}  // namespace mldp
