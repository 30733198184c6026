#pragma once

// Empirical certificates for the structural conditions on (A, B):
//   A1 hemicontinuity, A2 strong monotonicity, A2' monotone + coercive,
//   A3 growth bound, A4 noise approximable by Galerkin projections.
//
// Porous-media and fast-diffusion drifts are checked in the geometry they
// are monotone in: H is the discrete H^{-1} (dual of the Dirichlet H^1) and
// V is L^α. Every other family uses H = L², V = W^{1,α}_0.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "mldp/gelfand.hpp"
#include "mldp/operators.hpp"

namespace mldp {

class WorkerPool;

struct ConditionEntry {
  std::string id;  // "A1", "A2", "A2'", "A3", "A4"
  bool claimed = true;
  bool pass = false;
  std::map<std::string, double> constants;
  std::vector<double> witness_first;
  std::vector<double> witness_second;
  std::size_t samples = 0;
  std::string note;
};

struct ConditionReport {
  std::string family;
  std::string geometry;  // "L2/W1a" or "H-1/La"
  std::vector<ConditionEntry> entries;
  std::vector<double> a4_decay;  // sup over samples of ‖P_n B − B‖₂, n = 1..dim

  const ConditionEntry& entry(const std::string& id) const;
};

struct ConditionOptions {
  std::vector<double> amplitudes{0.1, 1.0, 10.0};
  double horizon = 1.0;           // times are drawn uniformly from [0, horizon]
  int hemicontinuity_points = 41; // s-grid on [-1, 1]
  double jump_factor = 1e3;       // flag a step that exceeds this × its neighbours
  double a4_tolerance = 1e-8;
};

ConditionReport verify_conditions(const DriftSpec& drift, const NoiseSpec& noise,
                                  const DiscreteTriple& triple, int n_samples, std::uint64_t seed,
                                  const ConditionOptions& options = {}, const WorkerPool* pool = nullptr);

nlohmann::json to_json(const ConditionReport& report);

}  // namespace mldp
