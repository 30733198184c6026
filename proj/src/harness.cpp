#include "mldp/harness.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"

#include "mldp/action.hpp"
#include "mldp/conditions.hpp"
#include "mldp/config.hpp"
#include "mldp/errors.hpp"
#include "mldp/evolution.hpp"
#include "mldp/parallel.hpp"
#include "mldp/path_io.hpp"
#include "mldp/rare_event.hpp"

namespace mldp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr const char* kVersion = "0.1.0";

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Context {
  const RunOptions& options;
  ExperimentConfig cfg;
  fs::path out;
  WorkerPool pool;
  json timings = json::object();
  json outputs = json::array();
  json seeds = json::object();

  std::string file(const std::string& name) {
    outputs.push_back(name);
    return (out / name).string();
  }

  void say(const std::string& line) const {
    if (!options.quiet) std::cout << line << '\n';
  }
};

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << j.dump(2) << '\n';
}

const ConstraintSpec& require_constraint(const ExperimentConfig& cfg, const std::string& sub) {
  if (!cfg.constraint) throw ConfigError("config: " + sub + " needs a constraint section");
  validate(*cfg.constraint, *cfg.triple, cfg.solver, false);
  return *cfg.constraint;
}

ControlPath load_control(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const std::size_t m = cfg.noise.modes();
  if (!ctx.options.control_path) return ControlPath::zeros(cfg.solver, m);
  ControlPath c = read_control_csv(*ctx.options.control_path);
  if (c.modes != m) {
    throw ShapeError("control has " + std::to_string(c.modes) + " modes, noise has " + std::to_string(m));
  }
  const auto grid = uniform_time_grid(cfg.solver.T, cfg.solver.n_steps);
  if (c.time_grid.size() != grid.size()) {
    throw ShapeError("control has " + std::to_string(c.n_intervals()) + " intervals, solver has " +
                     std::to_string(cfg.solver.n_steps));
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (std::abs(c.time_grid[k] - grid[k]) > 1e-12 * cfg.solver.T) throw ShapeError("control time grid does not match the solver grid");
  }
  c.time_grid = grid;
  return c;
}

void emit_path(Context& ctx, const std::string& stem, const PathRecord& path) {
  write_path_csv(ctx.file(stem + ".csv"), path);
  if (ctx.options.binary) write_path_binary(ctx.file(stem + ".bin"), path);
}

int verify_conditions_cmd(Context& ctx) {
  const auto t0 = Clock::now();
  const auto& cfg = ctx.cfg;
  const auto report = verify_conditions(cfg.drift, cfg.noise, *cfg.triple, cfg.condition_samples, cfg.seed,
                                        cfg.condition_options, &ctx.pool);
  ctx.timings["verify_conditions"] = seconds_since(t0);
  const json j = to_json(report);
  write_json(ctx.file("conditions.json"), j);
  ctx.say(j.dump(2));
  return kExitOk;
}

int skeleton_cmd(Context& ctx) {
  const auto t0 = Clock::now();
  const auto& cfg = ctx.cfg;
  const ControlPath control = load_control(ctx);
  const PathRecord path = solve_skeleton(cfg.x0, control, cfg.drift, cfg.noise, cfg.solver);
  ctx.timings["skeleton"] = seconds_since(t0);
  emit_path(ctx, "skeleton", path);
  ctx.say("skeleton: terminal H-norm " + format_double(h_norm(*cfg.triple, path.terminal())) + ", control energy " +
          format_double(control.energy()));
  return kExitOk;
}

int minimize_action_cmd(Context& ctx) {
  const auto t0 = Clock::now();
  const auto& cfg = ctx.cfg;
  const ConstraintSpec& constraint = require_constraint(cfg, "minimize-action");
  ctx.seeds["optimizer"] = cfg.optimizer.seed;
  const ActionResult result = minimize_action(constraint, cfg.x0, cfg.drift, cfg.noise, cfg.solver, cfg.optimizer, &ctx.pool);
  ctx.timings["minimize_action"] = seconds_since(t0);
  write_json(ctx.file("action.json"), to_json(result));
  write_control_csv(ctx.file("minimizer.csv"), result.minimizer);
  emit_path(ctx, "optimal_path", solve_skeleton(cfg.x0, result.minimizer, cfg.drift, cfg.noise, cfg.solver));
  if (!result.feasible) {
    std::cerr << "mldp: infeasible action problem: no start reached violation <= "
              << format_double(cfg.optimizer.feasibility_tol) << " (best " << format_double(result.violation) << ")\n";
    return kExitInfeasible;
  }
  ctx.say("minimize-action: I* = " + format_double(result.value) + " after " + std::to_string(result.iterations) +
          " iterations");
  return kExitOk;
}

int simulate_cmd(Context& ctx) {
  const auto t0 = Clock::now();
  const auto& cfg = ctx.cfg;
  const double eps = ctx.options.eps.value_or(cfg.simulate_eps);
  const std::int64_t samples = ctx.options.samples.value_or(cfg.simulate_samples);
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError("--eps must be finite and >= 0");
  if (samples < 1) throw ConfigError("--samples must be >= 1");
  ctx.seeds["simulate_eps"] = eps;
  const ControlPath control = load_control(ctx);
  const bool controlled = ctx.options.control_path.has_value();
  const auto n = static_cast<std::size_t>(samples);
  std::vector<double> terminal(n);
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%04zu", i);
    names[i] = buf;
  }
  ctx.pool.for_ranges(n, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const NoiseDraw draw = NoiseDraw::generate(sample_seed(cfg.seed, i), cfg.solver, cfg.noise.modes());
      const PathRecord path = simulate(cfg.x0, eps, controlled ? &control : nullptr, cfg.drift, cfg.noise,
                                       cfg.solver, eps > 0.0 ? &draw : nullptr);
      write_path_csv((ctx.out / (names[i] + ".csv")).string(), path);
      if (ctx.options.binary) write_path_binary((ctx.out / (names[i] + ".bin")).string(), path);
      terminal[i] = h_norm(*cfg.triple, path.terminal());
    }
  });
  for (const auto& name : names) {
    ctx.outputs.push_back(name + ".csv");
    if (ctx.options.binary) ctx.outputs.push_back(name + ".bin");
  }
  std::ofstream summary(ctx.file("simulate.csv"));
  summary << "sample,seed,terminal_h_norm\n";
  for (std::size_t i = 0; i < n; ++i) {
    summary << i << ',' << sample_seed(cfg.seed, i) << ',' << format_double(terminal[i]) << '\n';
  }
  ctx.timings["simulate"] = seconds_since(t0);
  ctx.say("simulate: " + std::to_string(n) + " path(s) at eps " + format_double(eps));
  return kExitOk;
}

int sweep_cmd(Context& ctx) {
  const auto t0 = Clock::now();
  auto& cfg = ctx.cfg;
  const ConstraintSpec& constraint = require_constraint(cfg, "sweep");
  if (cfg.eps_list.empty()) throw ConfigError("config: sweep.eps_list is empty");
  ctx.seeds["optimizer"] = cfg.optimizer.seed;
  const LdpTable table = ldp_sweep(constraint, cfg.eps_list, cfg.budgets, cfg.x0, cfg.drift, cfg.noise, cfg.solver,
                                   cfg.seed, cfg.optimizer, &ctx.pool);
  ctx.timings["sweep"] = seconds_since(t0);
  write_ldp_csv(ctx.file("ldp.csv"), table);
  write_json(ctx.file("action.json"), to_json(table.action));
  write_control_csv(ctx.file("minimizer.csv"), table.action.minimizer);
  if (!table.feasible) {
    std::cerr << "mldp: infeasible action problem; table written without gaps\n";
    return kExitInfeasible;
  }
  ctx.say("sweep: I* = " + format_double(table.i_star));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    ctx.say("  eps " + format_double(r.eps) + "  p " + format_double(r.p_hat) + "  -eps^2 log p " +
            format_double(-r.log_stat) + "  gap " + format_double(table.gaps[i]) + " (" + to_string(r.estimator) + ")");
  }
  return kExitOk;
}

void write_manifest(Context& ctx, int code, double total) {
  json m;
  m["subcommand"] = ctx.options.subcommand;
  m["config_path"] = ctx.options.config_path;
  m["config_hash"] = config_hash(ctx.cfg);
  m["config"] = to_json(ctx.cfg);
  m["exit_code"] = code;
  m["threads"] = ctx.pool.threads();
  json seeds = ctx.seeds;
  seeds["master"] = ctx.cfg.seed;
  m["seeds"] = seeds;
  json timings = ctx.timings;
  timings["total"] = total;
  m["wall_time_seconds"] = timings;
  m["versions"] = {{"mldp", kVersion},
                   {"compiler", __VERSION__},
                   {"cplusplus", __cplusplus},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  m["outputs"] = ctx.outputs;
  write_json((ctx.out / "manifest.json").string(), m);
}

int report_current_exception() {
  try {
    throw;
  } catch (const ConfigError& e) {
    std::cerr << "mldp: validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ShapeError& e) {
    std::cerr << "mldp: validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const SolverError& e) {
    std::cerr << "mldp: solver error: " << e.what() << " (residual " << format_double(e.residual()) << ")\n";
    return kExitSolver;
  } catch (const NumericError& e) {
    std::cerr << "mldp: numeric error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "mldp: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace

int run(const RunOptions& options) {
  const auto t0 = Clock::now();
  std::optional<Context> ctx;
  try {
    ExperimentConfig cfg = load_config(options.config_path);
    if (options.seed) cfg.seed = *options.seed;
    if (options.eps) cfg.simulate_eps = *options.eps;
    if (options.samples) {
      cfg.simulate_samples = *options.samples;
      if (options.subcommand == "sweep") std::fill(cfg.budgets.begin(), cfg.budgets.end(), *options.samples);
    }
    if (options.out_dir) cfg.output_dir = *options.out_dir;
    ctx.emplace(Context{options, std::move(cfg), {}, WorkerPool(WorkerPool::resolve_threads(options.threads))});
    ctx->out = ctx->cfg.output_dir;
    fs::create_directories(ctx->out);
  } catch (...) {
    return report_current_exception();
  }

  int code = kExitOk;
  try {
    if (options.subcommand == "verify-conditions") code = verify_conditions_cmd(*ctx);
    else if (options.subcommand == "skeleton") code = skeleton_cmd(*ctx);
    else if (options.subcommand == "minimize-action") code = minimize_action_cmd(*ctx);
    else if (options.subcommand == "simulate") code = simulate_cmd(*ctx);
    else if (options.subcommand == "sweep") code = sweep_cmd(*ctx);
    else throw ConfigError("unknown subcommand '" + options.subcommand + "'");
  } catch (...) {
    code = report_current_exception();
  }
  try {
    write_manifest(*ctx, code, seconds_since(t0));
  } catch (...) {
    const int c = report_current_exception();
    if (code == kExitOk) code = c;
  }
  return code;
}

}  // namespace mldp
