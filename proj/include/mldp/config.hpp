#pragma once

// One JSON document configures every subcommand. Parsing fills in defaults
// and rejects unknown keys, so the normalized form (to_json) is what the
// manifest hash covers.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mldp/action.hpp"
#include "mldp/conditions.hpp"
#include "mldp/evolution.hpp"
#include "mldp/gelfand.hpp"
#include "mldp/operators.hpp"

namespace mldp {

struct ExperimentConfig {
  nlohmann::json triple_json;  // normalized sections, kept for hashing and reporting
  nlohmann::json drift_json;
  nlohmann::json noise_json;
  nlohmann::json initial_json;
  nlohmann::json constraint_json;

  TriplePtr triple;
  DriftSpec drift;
  NoiseSpec noise;
  StateVector x0;
  SolverConfig solver;
  std::optional<ConstraintSpec> constraint;
  OptimizerSettings optimizer;

  std::vector<double> eps_list;
  std::vector<std::int64_t> budgets;
  double simulate_eps = 0.0;
  std::int64_t simulate_samples = 1;
  int condition_samples = 1000;
  ConditionOptions condition_options;

  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::string base_dir;  // directory of the config file, for relative paths
};

/// Parses and validates; throws ConfigError / ShapeError naming the field.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Normalized document with every default filled in.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// FNV-1a (64-bit) of the normalized document without output_dir, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace mldp
