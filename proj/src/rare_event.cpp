#include "mldp/rare_event.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "mldp/errors.hpp"
#include "mldp/parallel.hpp"
#include "mldp/path_io.hpp"
#include "mldp/random.hpp"

namespace mldp {

const char* to_string(Estimator e) { return e == Estimator::plain ? "plain" : "importance"; }

std::pair<double, double> wilson_interval(std::int64_t hits, std::int64_t n) {
  const double z = kNormalQuantile975;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  double lo = std::max(0.0, center - half);
  double hi = std::min(1.0, center + half);
  // keep p̂ inside the interval against rounding at the extremes
  return {std::min(lo, p), std::max(hi, p)};
}

std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index) { return derive_seed(master, index, 0x5A3); }

double log_weight(const ControlPath& tilt, std::span<const double> increments, double eps) {
  const std::size_t m = tilt.modes;
  double linear = 0.0;
  double quadratic = 0.0;
  for (std::size_t k = 0; k < tilt.n_intervals(); ++k) {
    const auto row = tilt.row(k);
    double a = 0.0;
    double b = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      a += row[j] * increments[k * m + j];
      b += row[j] * row[j];
    }
    linear += a;
    quadratic += tilt.dt(k) * b;
  }
  return -linear / eps - quadratic / (2.0 * eps * eps);
}

namespace {

// Fixed-shape pairwise sum; the tree depends only on the length.
double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

constexpr std::size_t kChunk = 256;

// Runs every sample and stores log w (−inf for a miss) in slot i.
std::vector<double> run_samples(const ConstraintSpec& event, double eps, std::int64_t n_samples,
                                const ControlPath* tilt, const StateVector& x0, const DriftSpec& drift,
                                const NoiseSpec& noise, const SolverConfig& cfg, std::uint64_t seed,
                                const WorkerPool* pool) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("estimate: eps must be > 0");
  if (n_samples < 1) throw ConfigError("estimate: n_samples must be >= 1");
  validate(event, *x0.triple, cfg, true);
  const std::size_t m = noise.modes();
  const auto steps = static_cast<std::size_t>(cfg.n_steps);
  if (tilt && (tilt->modes != m || tilt->n_intervals() != steps)) {
    throw ShapeError("importance_estimate: tilt does not match the solver grid and noise modes");
  }
  Stepper probe(x0.triple, drift, noise, cfg);  // validates once up front

  const auto n = static_cast<std::size_t>(n_samples);
  std::vector<double> slots(n);
  const bool zero_tilt = !tilt || std::all_of(tilt->values.begin(), tilt->values.end(), [](double v) { return v == 0.0; });
  auto body = [&](std::size_t begin, std::size_t end) {
    Stepper stepper(x0.triple, drift, noise, cfg);
    std::vector<double> increments(steps * m);
    std::vector<double> states;
    PathRecord path;
    path.triple = x0.triple;
    path.time_grid = uniform_time_grid(cfg.T, cfg.n_steps);
    path.kind = PathKind::sde_sample;
    const bool keep = event.needs_path();
    for (std::size_t i = begin; i < end; ++i) {
      fill_normal(sample_seed(seed, i), cfg.dt(), increments);
      stepper.integrate(x0.values, eps, zero_tilt ? nullptr : tilt, increments, x0.size(), keep,
                        keep ? path.states : states);
      const double v = keep ? event.violation(path) : event.terminal_violation(*x0.triple, states);
      if (v > 0.0) {
        slots[i] = -std::numeric_limits<double>::infinity();
      } else {
        slots[i] = zero_tilt ? 0.0 : log_weight(*tilt, increments, eps);
      }
    }
  };
  if (pool) pool->for_ranges(n, kChunk, body);
  else body(0, n);
  return slots;
}

EstimateRecord reduce(const std::vector<double>& slots, double eps, Estimator estimator) {
  EstimateRecord r;
  r.eps = eps;
  r.estimator = estimator;
  const std::size_t n = slots.size();
  r.n_samples = static_cast<std::int64_t>(n);
  const double nn = static_cast<double>(n);
  double shift = -std::numeric_limits<double>::infinity();
  for (double lw : slots) {
    if (lw > -std::numeric_limits<double>::infinity()) {
      ++r.hits;
      shift = std::max(shift, lw);
    }
  }
  const double corrected = (static_cast<double>(r.hits) + 0.5) / (nn + 1.0);
  if (estimator == Estimator::plain) {
    r.p_hat = static_cast<double>(r.hits) / nn;
    std::tie(r.ci_low, r.ci_high) = wilson_interval(r.hits, r.n_samples);
    r.log_stat = eps * eps * std::log(corrected);
    r.ess = nn;
    r.std_error = std::sqrt(r.p_hat * (1.0 - r.p_hat) / nn);
    return r;
  }
  if (r.hits == 0) {
    r.log_stat = eps * eps * std::log(corrected);
    return r;
  }
  std::vector<double> w1(n), w2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(slots[i] - shift);  // exp(−inf) = 0 for misses
    w1[i] = e;
    w2[i] = e * e;
  }
  const double s1 = pairwise_sum(w1.data(), n);
  const double s2 = pairwise_sum(w2.data(), n);
  const double scale = std::exp(shift);
  r.p_hat = scale * s1 / nn;
  const double second = scale * scale * s2 / nn;
  const double var = n > 1 ? std::max(0.0, second - r.p_hat * r.p_hat) * nn / (nn - 1.0) : 0.0;
  r.std_error = std::sqrt(var / nn);
  r.ci_low = std::max(0.0, r.p_hat - kNormalQuantile975 * r.std_error);
  r.ci_high = r.p_hat + kNormalQuantile975 * r.std_error;
  r.log_stat = eps * eps * std::log(r.p_hat);
  r.ess = s1 * s1 / s2;
  return r;
}

}  // namespace

EstimateRecord estimate_probability(const ConstraintSpec& event, double eps, std::int64_t n_samples,
                                    const StateVector& x0, const DriftSpec& drift, const NoiseSpec& noise,
                                    const SolverConfig& cfg, std::uint64_t seed, const WorkerPool* pool) {
  const auto slots = run_samples(event, eps, n_samples, nullptr, x0, drift, noise, cfg, seed, pool);
  return reduce(slots, eps, Estimator::plain);
}

EstimateRecord importance_estimate(const ConstraintSpec& event, double eps, std::int64_t n_samples,
                                   const ControlPath& tilt, const StateVector& x0, const DriftSpec& drift,
                                   const NoiseSpec& noise, const SolverConfig& cfg, std::uint64_t seed,
                                   const WorkerPool* pool) {
  const auto slots = run_samples(event, eps, n_samples, &tilt, x0, drift, noise, cfg, seed, pool);
  return reduce(slots, eps, Estimator::importance);
}

LdpTable ldp_sweep(const ConstraintSpec& event, const std::vector<double>& eps_list,
                   const std::vector<std::int64_t>& budgets, const StateVector& x0, const DriftSpec& drift,
                   const NoiseSpec& noise, const SolverConfig& cfg, std::uint64_t seed,
                   const OptimizerSettings& opt, const WorkerPool* pool) {
  if (eps_list.empty()) throw ConfigError("sweep: eps_list is empty");
  if (budgets.size() != eps_list.size()) throw ConfigError("sweep: one sample budget per eps is required");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw ConfigError("sweep: eps values must be > 0");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ConfigError("sweep: eps_list must be strictly decreasing");
    if (budgets[i] < 1) throw ConfigError("sweep: sample budgets must be >= 1");
  }

  LdpTable table;
  table.action = minimize_action(event, x0, drift, noise, cfg, opt, pool);
  table.feasible = table.action.feasible;
  table.i_star = table.action.value;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double eps = eps_list[i];
    const std::uint64_t row_seed = derive_seed(seed, i, 0x5EE9);
    const double predicted = table.feasible ? std::exp(-table.i_star / (eps * eps)) : 1.0;
    const bool plain = predicted > 100.0 / static_cast<double>(budgets[i]);
    table.rows.push_back(plain ? estimate_probability(event, eps, budgets[i], x0, drift, noise, cfg, row_seed, pool)
                               : importance_estimate(event, eps, budgets[i], table.action.minimizer, x0, drift,
                                                     noise, cfg, row_seed, pool));
    if (table.feasible) table.gaps.push_back(std::abs(-table.rows.back().log_stat - table.i_star));
  }
  return table;
}

void write_ldp_csv(std::ostream& os, const LdpTable& table) {
  os << "eps,n,hits,p_hat,ci_low,ci_high,log_stat,gap,estimator,ess\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    os << format_double(r.eps) << ',' << r.n_samples << ',' << r.hits << ',' << format_double(r.p_hat) << ','
       << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ',' << format_double(r.log_stat) << ','
       << (i < table.gaps.size() ? format_double(table.gaps[i]) : std::string()) << ',' << to_string(r.estimator)
       << ',' << format_double(r.ess) << '\n';
  }
}

void write_ldp_csv(const std::string& file, const LdpTable& table) {
  std::ofstream os(file);
  if (!os) throw ConfigError("cannot open " + file + " for writing");
  write_ldp_csv(os, table);
}

}  // namespace mldp
