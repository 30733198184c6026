#pragma once

// Monte Carlo estimates of P(X^ε ∈ A) and the ε² log P sweep compared with
// the minimal action.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mldp/action.hpp"
#include "mldp/evolution.hpp"

namespace mldp {

class WorkerPool;

enum class Estimator { plain, importance };
const char* to_string(Estimator e);

struct EstimateRecord {
  double eps = 0.0;
  std::int64_t n_samples = 0;
  std::int64_t hits = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double log_stat = 0.0;  // ε²·log p
  Estimator estimator = Estimator::plain;
  double ess = 0.0;
  double std_error = 0.0;
};

/// Two-sided 95% Wilson score interval for hits out of n.
std::pair<double, double> wilson_interval(std::int64_t hits, std::int64_t n);

inline constexpr double kNormalQuantile975 = 1.959963984540054;

/// Plain Monte Carlo. Sample i uses the noise draw seeded by
/// sample_seed(seed, i); the result does not depend on the pool size.
EstimateRecord estimate_probability(const ConstraintSpec& event, double eps, std::int64_t n_samples,
                                    const StateVector& x0, const DriftSpec& drift, const NoiseSpec& noise,
                                    const SolverConfig& cfg, std::uint64_t seed, const WorkerPool* pool = nullptr);

/// Importance sampling under the shifted dynamics dX = (A + B·tilt)dt + εB dW,
/// reweighted by the Girsanov density. Same per-sample draws as the plain
/// estimator.
EstimateRecord importance_estimate(const ConstraintSpec& event, double eps, std::int64_t n_samples,
                                   const ControlPath& tilt, const StateVector& x0, const DriftSpec& drift,
                                   const NoiseSpec& noise, const SolverConfig& cfg, std::uint64_t seed,
                                   const WorkerPool* pool = nullptr);

std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index);

/// log of the Girsanov weight for one path:
/// −(1/ε)Σ⟨tilt_k, ΔW_k⟩ − (1/(2ε²))Σ dt_k‖tilt_k‖².
double log_weight(const ControlPath& tilt, std::span<const double> increments, double eps);

struct LdpTable {
  std::vector<EstimateRecord> rows;
  double i_star = 0.0;
  bool feasible = true;  // false when the action problem had no feasible point; gaps are then absent
  std::vector<double> gaps;
  ActionResult action;
};

LdpTable ldp_sweep(const ConstraintSpec& event, const std::vector<double>& eps_list,
                   const std::vector<std::int64_t>& budgets, const StateVector& x0, const DriftSpec& drift,
                   const NoiseSpec& noise, const SolverConfig& cfg, std::uint64_t seed,
                   const OptimizerSettings& opt = {}, const WorkerPool* pool = nullptr);

/// Header eps,n,hits,p_hat,ci_low,ci_high,log_stat,gap,estimator,ess.
void write_ldp_csv(std::ostream& os, const LdpTable& table);
void write_ldp_csv(const std::string& file, const LdpTable& table);

}  // namespace mldp
