#include <cstdint>
#include <string>

#include "CLI11.hpp"

#include "mldp/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Small-noise large deviations for monotone stochastic evolution equations"};
  app.require_subcommand(1, 1);

  mldp::RunOptions opts;
  std::string out;
  double eps = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  std::string control;

  auto common = [&](CLI::App* sub) {
    sub->add_option("config", opts.config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory (overrides output_dir)");
    sub->add_option("--threads", opts.threads, "worker threads (default: MLDP_THREADS, then all cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--binary", opts.binary, "also write MLDP1 binary path dumps");
    sub->add_flag("-q,--quiet", opts.quiet, "suppress the stdout summary");
  };

  auto* verify = app.add_subcommand("verify-conditions", "empirical certificates for the drift/noise conditions");
  auto* skeleton = app.add_subcommand("skeleton", "solve the controlled skeleton equation");
  auto* minimize = app.add_subcommand("minimize-action", "minimal control energy reaching the constraint set");
  auto* simulate = app.add_subcommand("simulate", "sample paths of the small-noise equation");
  auto* sweep = app.add_subcommand("sweep", "estimate eps^2 log P over the eps list and compare with I*");
  for (auto* sub : {verify, skeleton, minimize, simulate, sweep}) common(sub);

  for (auto* sub : {skeleton, simulate}) sub->add_option("--control", control, "control CSV (t,phi_1..)")->check(CLI::ExistingFile);
  simulate->add_option("--eps", eps, "noise intensity")->check(CLI::NonNegativeNumber);
  for (auto* sub : {simulate, sweep}) {
    sub->add_option("--samples", samples, "number of samples (sweep: per eps)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "master seed");
  }

  CLI11_PARSE(app, argc, argv);

  auto* chosen = app.get_subcommands().front();
  opts.subcommand = chosen->get_name();
  if (!out.empty()) opts.out_dir = out;
  auto given = [chosen](const std::string& name) {
    const CLI::Option* o = chosen->get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };
  if (given("--eps")) opts.eps = eps;
  if (given("--samples")) opts.samples = samples;
  if (given("--seed")) opts.seed = seed;
  if (given("--control")) opts.control_path = control;
  return mldp::run(opts);
}
