#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace mldp {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitSolver = 3, kExitInfeasible = 4 };

struct RunOptions {
  std::string subcommand;  // verify-conditions | skeleton | minimize-action | simulate | sweep
  std::string config_path;
  std::optional<std::string> out_dir;
  int threads = 0;  // 0: MLDP_THREADS, then hardware concurrency
  std::optional<double> eps;
  std::optional<std::int64_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> control_path;
  bool binary = false;  // also write MLDP1 path dumps
  bool quiet = false;
};

/// Runs one subcommand end to end and writes its artifacts plus
/// manifest.json into the output directory. Diagnostics go to stderr.
int run(const RunOptions& options);

}  // namespace mldp
