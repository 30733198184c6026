#include "mldp/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mldp/errors.hpp"
#include "mldp/random.hpp"

namespace mldp {

namespace {

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

void SolverConfig::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("solver: horizon T must be > 0");
  if (n_steps < 1) throw ConfigError("solver: n_steps must be >= 1");
  if (!(picard_tol > 0.0)) throw ConfigError("solver: picard_tol must be > 0");
  if (picard_max_iters < 1) throw ConfigError("solver: picard_max_iters must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("solver: damping must lie in (0, 1]");
}

ControlPath ControlPath::zeros(const SolverConfig& cfg, std::size_t modes) {
  ControlPath c;
  c.time_grid = uniform_time_grid(cfg.T, cfg.n_steps);
  c.modes = modes;
  c.values.assign(static_cast<std::size_t>(cfg.n_steps) * modes, 0.0);
  return c;
}

double ControlPath::energy() const {
  double e = 0.0;
  for (std::size_t k = 0; k < n_intervals(); ++k) {
    double s = 0.0;
    for (double x : row(k)) s += x * x;
    e += dt(k) * s;
  }
  return 0.5 * e;
}

NoiseDraw NoiseDraw::generate(std::uint64_t seed, const SolverConfig& cfg, std::size_t modes) {
  NoiseDraw d;
  d.seed = seed;
  d.n_steps = cfg.n_steps;
  d.modes = modes;
  d.increments.resize(static_cast<std::size_t>(cfg.n_steps) * modes);
  fill_normal(seed, cfg.dt(), d.increments);
  return d;
}

Stepper::Stepper(TriplePtr triple, const DriftSpec& drift, const NoiseSpec& noise, const SolverConfig& cfg)
    : triple_(std::move(triple)), drift_(drift), noise_(noise), cfg_(cfg) {
  cfg_.validate();
  validate(drift_);
  validate(noise_, *triple_);
  if (cfg_.dt() * drift_.declared_K >= 1.0) {
    throw ConfigError("solver: dt·K = " + std::to_string(cfg_.dt() * drift_.declared_K) +
                      " must be < 1 for a contractive implicit step");
  }
  const std::size_t n = triple_->dim();
  if (is_linear(drift_)) {
    const std::vector<double> zero(n, 0.0);
    Tridiagonal M = drift_jacobian(drift_, *triple_, 0.0, zero);
    const double dt = cfg_.dt();
    lin_lower_.resize(n ? n - 1 : 0);
    lin_upper_.resize(n ? n - 1 : 0);
    lin_inv_pivot_.resize(n);
    double prev_upper = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lower = i > 0 ? -dt * M.lower[i - 1] : 0.0;
      const double pivot = 1.0 - dt * M.diag[i] - lower * prev_upper;
      if (pivot == 0.0 || !std::isfinite(pivot)) throw SolverError("implicit step: singular linear system", 0.0);
      lin_inv_pivot_[i] = 1.0 / pivot;
      if (i > 0) lin_lower_[i - 1] = lower;
      if (i + 1 < n) {
        prev_upper = -dt * M.upper[i] * lin_inv_pivot_[i];
        lin_upper_[i] = prev_upper;
      }
    }
    linear_ = true;
  }
  const std::size_t m = noise_.modes();
  noise_fixed_ = !noise_.state_dependent() &&
                 std::all_of(noise_.terms.begin(), noise_.terms.end(),
                             [](const NoiseTerm& term) { return term.profile.is_constant(); });
  if (noise_fixed_) {
    noise_columns_.resize(n * m);
    const std::vector<double> zero(n, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      noise_column_into(noise_, *triple_, 0.0, zero, j, std::span<double>(noise_columns_).subspan(j * n, n));
    }
  }
  for (auto* v : {&a_, &y_, &r_, &delta_, &trial_, &tmp_, &noise_term_, &buf0_, &buf1_}) v->resize(n);
}

double Stepper::residual_norm(double t_next, std::span<const double> rhs, std::span<const double> x) {
  const double dt = cfg_.dt();
  drift_apply_into(drift_, *triple_, t_next, x, a_);
  for (std::size_t i = 0; i < x.size(); ++i) r_[i] = x[i] - dt * a_[i] - rhs[i];
  return h_norm(*triple_, r_);
}

bool Stepper::newton(double t_next, std::span<const double> rhs, std::span<double> x, double& residual) {
  const double dt = cfg_.dt();
  const std::size_t n = x.size();
  ++stats_.newton_solves;
  residual = residual_norm(t_next, rhs, x);
  for (int it = 0; it < 50; ++it) {
    if (residual <= cfg_.picard_tol) return true;
    ++stats_.newton_iterations;
    Tridiagonal M = drift_jacobian(drift_, *triple_, t_next, x);
    for (std::size_t i = 0; i < n; ++i) {
      M.diag[i] = 1.0 - dt * M.diag[i];
      if (i + 1 < n) {
        M.lower[i] *= -dt;
        M.upper[i] *= -dt;
      }
    }
    M.solve(r_, delta_);
    double step = 1.0;
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) trial_[i] = x[i] - step * delta_[i];
      const double trial_res = residual_norm(t_next, rhs, trial_);
      if (trial_res < (1.0 - 1e-4 * step) * residual || trial_res <= cfg_.picard_tol) {
        std::copy(trial_.begin(), trial_.end(), x.begin());
        residual = trial_res;
        break;
      }
      step *= 0.5;
      if (step < 1e-8) {
        residual_norm(t_next, rhs, x);  // restore r_ for the caller
        return residual <= cfg_.picard_tol;
      }
    }
  }
  return residual <= cfg_.picard_tol;
}

void Stepper::implicit_solve(double t_next, std::span<const double> rhs, std::span<const double> guess,
                             std::span<double> out) {
  const double dt = cfg_.dt();
  const double theta = cfg_.damping;
  const std::size_t n = rhs.size();
  if (linear_) {
    ++stats_.direct_solves;
    out[0] = rhs[0] * lin_inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i) out[i] = (rhs[i] - lin_lower_[i - 1] * out[i - 1]) * lin_inv_pivot_[i];
    for (std::size_t i = n - 1; i-- > 0;) out[i] -= lin_upper_[i] * out[i + 1];
    return;
  }
  std::copy(guess.begin(), guess.end(), out.begin());

  double residual = 0.0;
  if (!prefer_newton_) {
    double best = std::numeric_limits<double>::infinity();
    int rising = 0;
    double previous = best;
    for (int it = 0; it < cfg_.picard_max_iters; ++it) {
      ++stats_.picard_iterations;
      drift_apply_into(drift_, *triple_, t_next, out, a_);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        y_[i] = rhs[i] + dt * a_[i];
        const double d = out[i] - y_[i];
        s += d * d;
      }
      residual = std::sqrt(triple_->h() * s);
      if (residual <= cfg_.picard_tol) return;
      rising = residual > previous ? rising + 1 : 0;
      previous = residual;
      best = std::min(best, residual);
      if (!std::isfinite(residual) || residual > 1e3 * best || rising >= 3) break;
      for (std::size_t i = 0; i < n; ++i) out[i] = (1.0 - theta) * out[i] + theta * y_[i];
    }
    if (!cfg_.newton_fallback) {
      throw SolverError("implicit step: Picard iteration did not converge (residual " +
                        std::to_string(residual) + ")", residual);
    }
    // restart Newton from the guess when Picard wandered off
    if (!std::isfinite(residual) || residual > best) std::copy(guess.begin(), guess.end(), out.begin());
    prefer_newton_ = true;
  }
  if (!newton(t_next, rhs, out, residual)) {
    throw SolverError("implicit step: Newton iteration did not converge (residual " +
                      std::to_string(residual) + ")", residual);
  }
}

void Stepper::apply_noise(double t, std::span<const double> x, std::span<const double> direction,
                          std::span<double> out) {
  if (!noise_fixed_) {
    noise_apply_into(noise_, *triple_, t, x, direction, out);
    return;
  }
  const std::size_t n = out.size();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < direction.size(); ++j) {
    const double d = direction[j];
    if (d == 0.0) continue;
    const double* col = noise_columns_.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) out[i] += d * col[i];
  }
}

void Stepper::step(std::span<const double> x, std::size_t k, double eps, std::span<const double> control_row,
                   std::span<const double> dW, std::size_t galerkin_n, std::span<double> out) {
  const std::size_t n = x.size();
  const double dt = cfg_.dt();
  const double t = k * dt;
  const bool use_control = !control_row.empty() && !all_zero(control_row);
  const bool use_noise = eps != 0.0 && !dW.empty();
  double* rhs = tmp_.data();  // implicit_solve never touches tmp_
  for (std::size_t i = 0; i < n; ++i) rhs[i] = x[i];
  if (noise_fixed_ && galerkin_n >= n) {
    const std::size_t m = noise_.modes();
    const double* cols = noise_columns_.data();
    if (use_control) {
      for (std::size_t j = 0; j < m; ++j) {
        const double a = dt * control_row[j];
        for (std::size_t i = 0; i < n; ++i) rhs[i] += a * cols[j * n + i];
      }
    }
    if (use_noise) {
      for (std::size_t j = 0; j < m; ++j) {
        const double a = eps * dW[j];
        for (std::size_t i = 0; i < n; ++i) rhs[i] += a * cols[j * n + i];
      }
    }
  } else {
    if (use_control) {
      apply_noise(t, x, control_row, noise_term_);
      for (std::size_t i = 0; i < n; ++i) rhs[i] += dt * noise_term_[i];
    }
    if (use_noise) {
      apply_noise(t, x, dW, noise_term_);
      if (galerkin_n < n) {
        project_into(*triple_, noise_term_, galerkin_n, y_);
        std::copy(y_.begin(), y_.end(), noise_term_.begin());
      }
      for (std::size_t i = 0; i < n; ++i) rhs[i] += eps * noise_term_[i];
    }
  }
  const double t_next = k + 1 == static_cast<std::size_t>(cfg_.n_steps) ? cfg_.T : (k + 1) * dt;
  implicit_solve(t_next, tmp_, x, out);
}

void Stepper::integrate(std::span<const double> x0, double eps, const ControlPath* control,
                        std::span<const double> increments, std::size_t galerkin_n, bool keep_path,
                        std::vector<double>& states) {
  const std::size_t n = triple_->dim();
  const auto steps = static_cast<std::size_t>(cfg_.n_steps);
  const std::size_t m = noise_.modes();
  if (x0.size() != n) throw ShapeError("integrate: initial state size mismatch");
  if (control && (control->n_intervals() != steps || control->modes != m)) {
    throw ShapeError("integrate: control grid does not match the solver grid and noise modes");
  }
  if (eps != 0.0 && increments.size() != steps * m) {
    throw ShapeError("integrate: noise draw does not match the solver grid and noise modes");
  }
  prefer_newton_ = false;

  states.resize(keep_path ? (steps + 1) * n : n);
  std::copy(x0.begin(), x0.end(), buf0_.begin());
  if (keep_path) std::copy(x0.begin(), x0.end(), states.begin());
  for (std::size_t k = 0; k < steps; ++k) {
    const auto ctrl = control ? control->row(k) : std::span<const double>{};
    const auto dW = eps != 0.0 ? increments.subspan(k * m, m) : std::span<const double>{};
    step(buf0_, k, eps, ctrl, dW, galerkin_n, buf1_);
    std::swap(buf0_, buf1_);
    if (keep_path) std::copy(buf0_.begin(), buf0_.end(), states.begin() + (k + 1) * n);
  }
  if (!keep_path) std::copy(buf0_.begin(), buf0_.end(), states.begin());
}

StateVector implicit_step(const StateVector& state, double t, double dt, const DriftSpec& drift,
                          const SolverConfig& cfg, const StateVector* initial_guess) {
  SolverConfig one = cfg;
  one.T = dt;
  one.n_steps = 1;
  Stepper stepper(state.triple, drift, NoiseSpec{}, one);
  std::vector<double> out(state.size());
  const auto& guess = initial_guess ? initial_guess->values : state.values;
  if (guess.size() != state.size()) throw ShapeError("implicit_step: guess size mismatch");
  stepper.implicit_solve(t + dt, state.values, guess, out);
  return StateVector(state.triple, std::move(out));
}

namespace {

PathRecord run(const StateVector& x0, double eps, const ControlPath* control, const DriftSpec& drift,
               const NoiseSpec& noise, const SolverConfig& cfg, const NoiseDraw* draw, std::size_t galerkin_n,
               PathKind kind) {
  if (eps < 0.0 || !std::isfinite(eps)) throw ConfigError("simulate: eps must be finite and >= 0");
  if (eps != 0.0) {
    if (!draw) throw ShapeError("simulate: eps > 0 requires a noise draw");
    if (draw->n_steps != cfg.n_steps || draw->modes != noise.modes()) {
      throw ShapeError("simulate: noise draw dimensions do not match solver grid and noise modes");
    }
  }
  Stepper stepper(x0.triple, drift, noise, cfg);
  PathRecord path;
  path.triple = x0.triple;
  path.kind = kind;
  path.time_grid = uniform_time_grid(cfg.T, cfg.n_steps);
  const std::span<const double> inc = (eps != 0.0 && draw) ? std::span<const double>(draw->increments)
                                                           : std::span<const double>{};
  stepper.integrate(x0.values, eps, control, inc, galerkin_n, true, path.states);
  return path;
}

}  // namespace

PathRecord solve_skeleton(const StateVector& x0, const ControlPath& control, const DriftSpec& drift,
                          const NoiseSpec& noise, const SolverConfig& cfg) {
  return run(x0, 0.0, &control, drift, noise, cfg, nullptr, x0.size(), PathKind::skeleton);
}

PathRecord simulate(const StateVector& x0, double eps, const ControlPath* control, const DriftSpec& drift,
                    const NoiseSpec& noise, const SolverConfig& cfg, const NoiseDraw* draw) {
  return run(x0, eps, control, drift, noise, cfg, draw, x0.size(), PathKind::sde_sample);
}

PathRecord galerkin_simulate(std::size_t n, const StateVector& x0, double eps, const DriftSpec& drift,
                             const NoiseSpec& noise, const SolverConfig& cfg, const NoiseDraw* draw) {
  if (n < 1 || n > x0.size()) {
    throw ConfigError("galerkin_simulate: n must lie in [1, " + std::to_string(x0.size()) + "]");
  }
  return run(x0, eps, nullptr, drift, noise, cfg, draw, n, PathKind::galerkin);
}

}  // namespace mldp
