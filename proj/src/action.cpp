#include "mldp/action.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>

#include "mldp/errors.hpp"
#include "mldp/parallel.hpp"
#include "mldp/random.hpp"

namespace mldp {

const char* to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::terminal_functional: return "terminal_functional";
    case ConstraintKind::terminal_state: return "terminal_state";
    case ConstraintKind::path_target: return "path_target";
  }
  return "?";
}

ConstraintKind constraint_kind_from_string(const std::string& s) {
  if (s == "terminal_functional") return ConstraintKind::terminal_functional;
  if (s == "terminal_state") return ConstraintKind::terminal_state;
  if (s == "path_target") return ConstraintKind::path_target;
  throw ConfigError("unknown constraint kind '" + s + "'");
}

double ConstraintSpec::terminal_violation(const DiscreteTriple& triple, std::span<const double> z_T) const {
  switch (kind) {
    case ConstraintKind::terminal_functional: {
      if (threshold == -std::numeric_limits<double>::infinity()) return 0.0;
      if (threshold == std::numeric_limits<double>::infinity()) return std::numeric_limits<double>::infinity();
      return std::max(0.0, threshold - h_inner(triple, weights, z_T));
    }
    case ConstraintKind::terminal_state: {
      double s = 0.0;
      for (std::size_t i = 0; i < z_T.size(); ++i) {
        const double d = z_T[i] - target_state[i];
        s += d * d;
      }
      return std::max(0.0, std::sqrt(triple.h() * s) - tolerance);
    }
    case ConstraintKind::path_target:
      throw ConfigError("path_target constraints need the whole path");
  }
  return 0.0;
}

double ConstraintSpec::violation(const PathRecord& path) const {
  if (kind == ConstraintKind::path_target) return std::max(0.0, path_metric(path, target_path) - tolerance);
  return terminal_violation(*path.triple, path.terminal());
}

void validate(const ConstraintSpec& c, const DiscreteTriple& triple, const SolverConfig& cfg, bool allow_infinite) {
  auto finite = [](const std::vector<double>& v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); };
  switch (c.kind) {
    case ConstraintKind::terminal_functional:
      if (c.weights.size() != triple.dim()) throw ShapeError("constraint: weights size does not match the grid");
      if (!finite(c.weights)) throw ConfigError("constraint: weights must be finite");
      if (std::isnan(c.threshold) || (!allow_infinite && !std::isfinite(c.threshold))) {
        throw ConfigError("constraint: threshold must be finite");
      }
      break;
    case ConstraintKind::terminal_state:
      if (c.target_state.size() != triple.dim()) throw ShapeError("constraint: target state size does not match the grid");
      if (!finite(c.target_state)) throw ConfigError("constraint: target state must be finite");
      break;
    case ConstraintKind::path_target: {
      const auto grid = uniform_time_grid(cfg.T, cfg.n_steps);
      if (!c.target_path.triple || !c.target_path.triple->same_grid(triple) || c.target_path.time_grid != grid) {
        throw ShapeError("constraint: target path is not on the solver grid");
      }
      if (!finite(c.target_path.states)) throw ConfigError("constraint: target path must be finite");
      break;
    }
  }
  if (!(c.tolerance >= 0.0) || !std::isfinite(c.tolerance)) throw ConfigError("constraint: tolerance must be finite and >= 0");
}

double control_energy(const ControlPath& control) { return control.energy(); }

void OptimizerSettings::validate() const {
  if (n_starts < 1) throw ConfigError("optimizer: n_starts must be >= 1");
  if (memory < 1) throw ConfigError("optimizer: memory must be >= 1");
  if (max_iterations < 1) throw ConfigError("optimizer: max_iterations must be >= 1");
  if (!(gradient_tol > 0.0)) throw ConfigError("optimizer: gradient_tol must be > 0");
  if (betas.empty()) throw ConfigError("optimizer: penalty schedule is empty");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0) || (i > 0 && betas[i] < betas[i - 1])) {
      throw ConfigError("optimizer: penalty schedule must be positive and non-decreasing");
    }
  }
  if (!(feasibility_tol > 0.0)) throw ConfigError("optimizer: feasibility_tol must be > 0");
  if (!(start_scale >= 0.0)) throw ConfigError("optimizer: start_scale must be >= 0");
}

namespace {

// d(violation)/dz for every time row, valid where violation > 0.
void violation_gradient(const ConstraintSpec& c, const PathRecord& path, std::vector<double>& out) {
  const DiscreteTriple& t = *path.triple;
  const std::size_t n = t.dim();
  const double h = t.h();
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t last = path.n_times() - 1;
  switch (c.kind) {
    case ConstraintKind::terminal_functional:
      for (std::size_t i = 0; i < n; ++i) out[last * n + i] = -h * c.weights[i];
      return;
    case ConstraintKind::terminal_state: {
      const auto z = path.terminal();
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (z[i] - c.target_state[i]) * (z[i] - c.target_state[i]);
      const double d = std::sqrt(h * s);
      if (d == 0.0) return;
      for (std::size_t i = 0; i < n; ++i) out[last * n + i] = h * (z[i] - c.target_state[i]) / d;
      return;
    }
    case ConstraintKind::path_target: {
      const double alpha = t.alpha;
      std::vector<double> e(n);
      std::size_t k_sup = 0;
      double sup = -1.0;
      double integral = 0.0;
      const auto& tg = path.time_grid;
      auto weight = [&](std::size_t k) {
        double w = 0.0;
        if (k > 0) w += 0.5 * (tg[k] - tg[k - 1]);
        if (k < last) w += 0.5 * (tg[k + 1] - tg[k]);
        return w;
      };
      for (std::size_t k = 0; k <= last; ++k) {
        for (std::size_t i = 0; i < n; ++i) e[i] = path.row(k)[i] - c.target_path.row(k)[i];
        const double hn = h_norm(t, e);
        if (hn > sup) {
          sup = hn;
          k_sup = k;
        }
        integral += weight(k) * v_norm_pow(t, e, alpha);
      }
      if (sup > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          out[k_sup * n + i] += h * (path.row(k_sup)[i] - c.target_path.row(k_sup)[i]) / sup;
        }
      }
      if (integral > 0.0) {
        const double outer = std::pow(integral, 1.0 / alpha - 1.0) / alpha;
        auto flux = [&](double g) { return alpha * std::pow(std::abs(g), alpha - 2.0) * g; };
        for (std::size_t k = 0; k <= last; ++k) {
          const double w = weight(k) * outer;
          if (w == 0.0) continue;
          for (std::size_t i = 0; i < n; ++i) e[i] = path.row(k)[i] - c.target_path.row(k)[i];
          // ∂/∂e_i of h Σ_c |(e_c − e_{c−1})/h|^α with ghost zeros
          double prev = 0.0;
          for (std::size_t cell = 0; cell <= n; ++cell) {
            const double cur = cell < n ? e[cell] : 0.0;
            const double g = (cur - prev) / h;
            if (g != 0.0) {
              const double f = flux(g);
              if (cell < n) out[k * n + cell] += w * f;
              if (cell > 0) out[k * n + cell - 1] -= w * f;
            }
            prev = cur;
          }
        }
      }
      return;
    }
  }
}

struct Evaluation {
  double value = 0.0;
  double energy = 0.0;
  double violation = 0.0;
};

// Penalized objective on the flat control vector φ (n_steps × m).
class Problem {
 public:
  Problem(const StateVector& x0, const ConstraintSpec& constraint, const DriftSpec& drift, const NoiseSpec& noise,
          const SolverConfig& cfg)
      : x0_(x0), constraint_(constraint), drift_(drift), noise_(noise), cfg_(cfg),
        stepper_(x0.triple, drift, noise, cfg), control_(ControlPath::zeros(cfg, noise.modes())) {
    path_.triple = x0.triple;
    path_.kind = PathKind::skeleton;
    path_.time_grid = control_.time_grid;
  }

  std::size_t size() const { return control_.values.size(); }
  const ControlPath& control() const { return control_; }
  const PathRecord& path() const { return path_; }

  // J = energy_weight·energy + β·violation²; gradient w.r.t. φ when grad != nullptr.
  Evaluation evaluate(std::span<const double> phi, double beta, std::vector<double>* grad,
                      double energy_weight = 1.0) {
    std::copy(phi.begin(), phi.end(), control_.values.begin());
    stepper_.integrate(x0_.values, 0.0, &control_, {}, x0_.size(), true, path_.states);
    Evaluation ev;
    ev.energy = control_.energy();
    ev.violation = constraint_.violation(path_);
    ev.value = energy_weight * ev.energy + beta * ev.violation * ev.violation;
    if (grad) adjoint(beta, ev.violation, energy_weight, *grad);
    return ev;
  }

 private:
  void adjoint(double beta, double violation, double energy_weight, std::vector<double>& grad) {
    const DiscreteTriple& t = *x0_.triple;
    const std::size_t n = t.dim();
    const std::size_t m = control_.modes;
    const std::size_t steps = control_.n_intervals();
    const double dt = cfg_.dt();
    grad.assign(steps * m, 0.0);

    dz_.assign((steps + 1) * n, 0.0);
    if (violation > 0.0 && beta != 0.0) {
      violation_gradient(constraint_, path_, dz_);
      for (double& x : dz_) x *= 2.0 * beta * violation;
    }
    std::vector<double> lambda(dz_.end() - n, dz_.end());
    std::vector<double> mu(n), bt(m);
    for (std::size_t kk = steps; kk-- > 0;) {
      const double t_next = kk + 1 == steps ? cfg_.T : (kk + 1) * dt;
      const double t_k = kk * dt;
      Tridiagonal M = drift_jacobian(drift_, t, t_next, path_.row(kk + 1));
      for (std::size_t i = 0; i < n; ++i) {
        M.diag[i] = 1.0 - dt * M.diag[i];
        if (i + 1 < n) {
          M.lower[i] *= -dt;
          M.upper[i] *= -dt;
        }
      }
      M.solve_transposed(lambda, mu);
      const auto z_k = path_.row(kk);
      const auto phi_k = control_.row(kk);
      noise_transpose_into(noise_, t, t_k, z_k, mu, bt);
      for (std::size_t j = 0; j < m; ++j) grad[kk * m + j] = dt * (energy_weight * phi_k[j] + bt[j]);
      for (std::size_t i = 0; i < n; ++i) lambda[i] = dz_[kk * n + i] + mu[i];
      std::vector<double> scaled(mu);
      for (double& x : scaled) x *= dt;
      noise_state_vjp(noise_, t, t_k, z_k, phi_k, scaled, lambda);
    }
  }

  StateVector x0_;
  const ConstraintSpec& constraint_;
  DriftSpec drift_;
  NoiseSpec noise_;
  SolverConfig cfg_;
  Stepper stepper_;
  ControlPath control_;
  PathRecord path_;
  std::vector<double> dz_;
};

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct LbfgsOutcome {
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>, std::vector<double>&)>;

LbfgsOutcome lbfgs(const Objective& f, std::vector<double>& x, int memory, int max_iterations, double gtol) {
  const std::size_t n = x.size();
  std::vector<double> g(n), g_new(n), d(n), x_new(n), alpha_buf;
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  double fx = f(x, g);
  LbfgsOutcome out;
  out.gradient_norm = norm2(g);
  bool just_reset = false;
  int stalls = 0;
  for (int it = 0; it < max_iterations; ++it) {
    if (out.gradient_norm <= gtol) {
      out.converged = true;
      return out;
    }
    // two-loop recursion
    d = g;
    alpha_buf.assign(S.size(), 0.0);
    for (std::size_t i = S.size(); i-- > 0;) {
      alpha_buf[i] = rho[i] * dot(S[i], d);
      for (std::size_t j = 0; j < n; ++j) d[j] -= alpha_buf[i] * Y[i][j];
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
    else gamma = std::min(1.0, 1.0 / std::max(out.gradient_norm, 1e-300));
    for (double& v : d) v *= gamma;
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double beta = rho[i] * dot(Y[i], d);
      for (std::size_t j = 0; j < n; ++j) d[j] += (alpha_buf[i] - beta) * S[i][j];
    }
    for (double& v : d) v = -v;
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      for (std::size_t j = 0; j < n; ++j) d[j] = -g[j] * std::min(1.0, 1.0 / out.gradient_norm);
      slope = dot(g, d);
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < n; ++j) x_new[j] = x[j] + step * d[j];
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++out.iterations;
    if (!accepted) {
      if (just_reset) break;
      S.clear();
      Y.clear();
      rho.clear();
      just_reset = true;
      continue;
    }
    just_reset = false;
    std::vector<double> s(n), y(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = x_new[j] - x[j];
      y[j] = g_new[j] - g[j];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * norm2(s) * norm2(y)) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    const double decrease = fx - f_new;
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    out.gradient_norm = norm2(g);
    stalls = decrease <= 1e-15 * std::max(1.0, std::abs(fx)) ? stalls + 1 : 0;
    if (stalls >= 3) break;
  }
  out.converged = out.gradient_norm <= gtol;
  return out;
}

struct StartOutcome {
  StartRecord record;
  std::vector<double> best_phi;  // incumbent feasible control, or final iterate if none
};

StartOutcome run_start(Problem& problem, std::vector<double> phi, const OptimizerSettings& opt, double dt,
                       std::uint64_t check_seed) {
  StartOutcome out;
  const std::size_t n = phi.size();
  const double sq = std::sqrt(dt);
  out.record.start_energy = 0.5 * dt * dot(phi, phi);

  double best_energy = std::numeric_limits<double>::infinity();
  auto consider = [&](std::span<const double> ph, const Evaluation& ev) {
    if (ev.violation <= opt.feasibility_tol && ev.energy < best_energy) {
      best_energy = ev.energy;
      out.best_phi.assign(ph.begin(), ph.end());
    }
  };

  // optimize in ψ = √dt·φ so the energy term is ½‖ψ‖²
  std::vector<double> psi(n), phi_buf(n), grad_phi;
  for (std::size_t i = 0; i < n; ++i) psi[i] = sq * phi[i];
  bool use_fd = false;
  double beta = 0.0;

  auto eval_psi = [&](std::span<const double> ps, std::vector<double>* grad_psi) {
    for (std::size_t i = 0; i < n; ++i) phi_buf[i] = ps[i] / sq;
    const Evaluation ev = problem.evaluate(phi_buf, beta, grad_psi ? &grad_phi : nullptr);
    consider(phi_buf, ev);
    if (grad_psi) {
      grad_psi->resize(n);
      for (std::size_t i = 0; i < n; ++i) (*grad_psi)[i] = grad_phi[i] / sq;
    }
    return ev;
  };
  auto fd_gradient = [&](std::span<const double> ps, std::vector<double>& g) {
    std::vector<double> p(ps.begin(), ps.end());
    g.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double hstep = 1e-6 * std::max(1.0, std::abs(p[i]));
      const double keep = p[i];
      p[i] = keep + hstep;
      const double fp = eval_psi(p, nullptr).value;
      p[i] = keep - hstep;
      const double fm = eval_psi(p, nullptr).value;
      p[i] = keep;
      g[i] = (fp - fm) / (2.0 * hstep);
    }
  };
  const Objective objective = [&](std::span<const double> ps, std::vector<double>& g) {
    if (use_fd) {
      fd_gradient(ps, g);
      return eval_psi(ps, nullptr).value;
    }
    return eval_psi(ps, &g).value;
  };

  std::vector<double> direction(n), g(n);
  int stage = 0;
  LbfgsOutcome last;
  for (double b : opt.betas) {
    beta = b;
    if (!use_fd && n > 0) {
      // spot-check the adjoint along a random direction
      fill_normal(derive_seed(check_seed, static_cast<std::uint64_t>(stage), 0xFDC0), 1.0, direction);
      const double dn = norm2(direction);
      for (double& v : direction) v /= dn;
      eval_psi(psi, &g);
      const double adj = dot(g, direction);
      const double hstep = 1e-6 * std::max(1.0, norm2(psi));
      std::vector<double> p(psi);
      for (std::size_t i = 0; i < n; ++i) p[i] = psi[i] + hstep * direction[i];
      const double fp = eval_psi(p, nullptr).value;
      for (std::size_t i = 0; i < n; ++i) p[i] = psi[i] - hstep * direction[i];
      const double fm = eval_psi(p, nullptr).value;
      const double fd = (fp - fm) / (2.0 * hstep);
      if (std::abs(adj - fd) > opt.fd_mismatch * std::max(std::abs(adj), std::abs(fd)) + 1e-6) {
        use_fd = true;
        out.record.used_fd_gradient = true;
      }
    }
    last = lbfgs(objective, psi, opt.memory, opt.max_iterations, opt.gradient_tol);
    out.record.iterations += last.iterations;
    const Evaluation ev = eval_psi(psi, nullptr);
    out.record.violation_history.push_back(ev.violation);
    ++stage;
    if (ev.violation <= opt.feasibility_tol) break;
  }
  out.record.gradient_norm = last.gradient_norm;

  // Gauss–Newton restoration: minimal-norm steps on the violation aimed
  // slightly inside the feasible set.
  Evaluation ev = eval_psi(psi, nullptr);
  for (int it = 0; it < opt.restoration_iterations && ev.violation > opt.feasibility_tol; ++it) {
    for (std::size_t i = 0; i < n; ++i) phi_buf[i] = psi[i] / sq;
    const Evaluation e = problem.evaluate(phi_buf, 1.0, &grad_phi, 0.0);
    // ∇(v²) = 2v∇v
    std::vector<double> gv(n);
    for (std::size_t i = 0; i < n; ++i) gv[i] = grad_phi[i] / sq / (2.0 * e.violation);
    const double gg = dot(gv, gv);
    if (!(gg > 0.0)) break;
    const double target = e.violation + 1e-2 * opt.feasibility_tol;
    double step = 1.0;
    bool improved = false;
    std::vector<double> trial(n);
    for (int ls = 0; ls < 30; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = psi[i] - step * target / gg * gv[i];
      const Evaluation te = eval_psi(trial, nullptr);
      if (te.violation < e.violation) {
        psi.swap(trial);
        ev = te;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  out.record.violation = ev.violation;
  out.record.feasible = std::isfinite(best_energy);
  out.record.value = best_energy;
  if (!out.record.feasible) {
    out.best_phi.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.best_phi[i] = psi[i] / sq;
  }
  return out;
}

}  // namespace

ObjectiveValue action_gradient(const ControlPath& control, const StateVector& x0, const ConstraintSpec& constraint,
                               double beta, const DriftSpec& drift, const NoiseSpec& noise, const SolverConfig& cfg) {
  validate(constraint, *x0.triple, cfg);
  Problem problem(x0, constraint, drift, noise, cfg);
  if (control.values.size() != problem.size() || control.modes != noise.modes()) {
    throw ShapeError("action_gradient: control does not match the solver grid and noise modes");
  }
  std::vector<double> grad;
  const Evaluation ev = problem.evaluate(control.values, beta, &grad);
  ObjectiveValue out;
  out.value = ev.value;
  out.energy = ev.energy;
  out.violation = ev.violation;
  out.penalty = ev.violation * ev.violation;
  out.gradient = problem.control();
  out.gradient.values = std::move(grad);
  return out;
}

ActionResult minimize_action(const ConstraintSpec& constraint, const StateVector& x0, const DriftSpec& drift,
                             const NoiseSpec& noise, const SolverConfig& cfg, const OptimizerSettings& opt,
                             const WorkerPool* pool) {
  opt.validate();
  validate(constraint, *x0.triple, cfg);
  const std::size_t m = noise.modes();
  const std::size_t size = static_cast<std::size_t>(cfg.n_steps) * m;

  std::vector<std::vector<double>> starts;
  starts.emplace_back(size, 0.0);
  for (int s = 1; s < opt.n_starts; ++s) {
    std::vector<double> phi(size);
    fill_normal(derive_seed(opt.seed, static_cast<std::uint64_t>(s), 0xAC7), opt.start_scale * opt.start_scale, phi);
    starts.push_back(std::move(phi));
  }
  for (const auto& extra : opt.extra_starts) {
    if (extra.values.size() != size || extra.modes != m) throw ShapeError("minimize_action: start control shape mismatch");
    starts.push_back(extra.values);
  }

  const std::size_t n_runs = starts.size();
  std::vector<StartOutcome> outcomes(n_runs);
  std::vector<std::string> failures(n_runs);
  auto body = [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      try {
        Problem problem(x0, constraint, drift, noise, cfg);
        outcomes[s] = run_start(problem, starts[s], opt, cfg.dt(), derive_seed(opt.seed, s, 0xC4EC));
      } catch (const SolverError& e) {
        failures[s] = e.what();
      } catch (const NumericError& e) {
        failures[s] = e.what();
      }
    }
  };
  if (pool) pool->for_ranges(n_runs, 1, body);
  else body(0, n_runs);

  if (std::all_of(failures.begin(), failures.end(), [](const std::string& f) { return !f.empty(); })) {
    throw SolverError("minimize_action: every start failed (" + failures.front() + ")", 0.0);
  }

  ActionResult result;
  result.minimizer = ControlPath::zeros(cfg, m);
  int best = -1;
  int least_violation = -1;
  for (std::size_t s = 0; s < n_runs; ++s) {
    if (!failures[s].empty()) {
      StartRecord failed;
      failed.start_energy = 0.5 * cfg.dt() * dot(starts[s], starts[s]);
      failed.violation = std::numeric_limits<double>::infinity();
      outcomes[s].record = failed;
    }
    const StartRecord& r = outcomes[s].record;
    result.starts.push_back(r);
    result.multi_start_values.push_back(r.value);
    if (!failures[s].empty()) continue;
    if (least_violation < 0 || r.violation < outcomes[least_violation].record.violation) least_violation = static_cast<int>(s);
    if (!r.feasible) continue;
    if (best < 0) {
      best = static_cast<int>(s);
      continue;
    }
    const StartRecord& b = outcomes[best].record;
    if (r.value < b.value - 1e-10 || (std::abs(r.value - b.value) <= 1e-10 && r.start_energy < b.start_energy)) {
      best = static_cast<int>(s);
    }
  }

  const int chosen = best >= 0 ? best : least_violation;
  const StartOutcome& win = outcomes[chosen];
  result.best_start = chosen;
  result.minimizer.values = win.best_phi;
  result.feasible = best >= 0;
  // inf over an empty set; the minimizer keeps the least-violating control
  result.value = result.feasible ? win.record.value : std::numeric_limits<double>::infinity();
  result.iterations = win.record.iterations;
  result.gradient_norm_final = win.record.gradient_norm;
  result.converged = result.feasible;
  {
    Problem problem(x0, constraint, drift, noise, cfg);
    result.violation = problem.evaluate(result.minimizer.values, 0.0, nullptr).violation;
  }
  if (result.feasible) {
    for (const auto& r : result.starts) {
      if (r.feasible && std::abs(r.value - result.value) > 1e-3 * std::max(1e-12, result.value)) {
        result.starts_disagree = true;
      }
    }
  }
  return result;
}

nlohmann::json to_json(const ActionResult& result) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["value"] = num(result.value);
  j["iterations"] = result.iterations;
  j["gradient_norm_final"] = num(result.gradient_norm_final);
  j["converged"] = result.converged;
  j["feasible"] = result.feasible;
  j["violation"] = num(result.violation);
  j["best_start"] = result.best_start;
  j["starts_disagree"] = result.starts_disagree;
  nlohmann::json values = nlohmann::json::array();
  nlohmann::json starts = nlohmann::json::array();
  for (const auto& r : result.starts) {
    values.push_back(num(r.value));
    nlohmann::json s;
    s["start_energy"] = num(r.start_energy);
    s["value"] = num(r.value);
    s["feasible"] = r.feasible;
    s["violation"] = num(r.violation);
    s["iterations"] = r.iterations;
    s["gradient_norm"] = num(r.gradient_norm);
    s["used_fd_gradient"] = r.used_fd_gradient;
    nlohmann::json hist = nlohmann::json::array();
    for (double v : r.violation_history) hist.push_back(num(v));
    s["violation_history"] = hist;
    starts.push_back(s);
  }
  j["multi_start_values"] = values;
  j["starts"] = starts;
  return j;
}

}  // namespace mldp
