#include "mldp/operators.hpp"

#include <algorithm>
#include <cmath>

#include "mldp/errors.hpp"

namespace mldp {

namespace {

// sign(x)·|x|^q with the convention 0 ↦ 0.
double signed_pow(double x, double q) {
  if (x == 0.0) return 0.0;
  if (q == 1.0) return x;
  return std::copysign(std::pow(std::abs(x), q), x);
}

// d/dx sign(x)|x|^q = q|x|^{q-1}; the a.e. value 0 is used at a singular origin.
double signed_pow_derivative(double x, double q) {
  if (q == 1.0) return 1.0;
  if (x == 0.0) return 0.0;
  return q * std::pow(std::abs(x), q - 1.0);
}

double psi_kappa(double x, double r, double kappa) {
  if (x == 0.0) return 0.0;
  return std::pow(std::abs(x) + kappa, r - 1.0) * x;
}

double psi_kappa_derivative(double x, double r, double kappa) {
  const double a = std::abs(x) + kappa;
  if (a == 0.0) return 0.0;
  return std::pow(a, r - 2.0) * (r * std::abs(x) + kappa);
}

void check_finite(std::span<const double> out, const DiscreteTriple& t, std::span<const double> v,
                  const char* what) {
  for (double x : out) {
    if (!std::isfinite(x)) {
      double s = 0.0;
      for (double y : v) s += y * y;
      throw NumericError(std::string(what) + ": non-finite result", std::sqrt(t.h() * s));
    }
  }
}

// out_i = (f(u_{i+1}) - 2 f(u_i) + f(u_{i-1})) / h² with f(0) boundary ghosts.
template <class F>
void laplacian_of(std::span<const double> u, double h, F&& f, std::span<double> out) {
  const std::size_t n = u.size();
  const double inv_h2 = 1.0 / (h * h);
  double left = 0.0;
  double mid = n > 0 ? f(u[0]) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double right = i + 1 < n ? f(u[i + 1]) : 0.0;
    out[i] = (right - 2.0 * mid + left) * inv_h2;
    left = mid;
    mid = right;
  }
}

// out_i = (F(g_{i+1}) - F(g_i)) / h with g_c the forward difference on cell c.
void p_laplacian(std::span<const double> u, double h, double p, std::span<double> out) {
  const std::size_t n = u.size();
  double prev = 0.0;
  double flux_left = 0.0;
  for (std::size_t c = 0; c <= n; ++c) {
    const double cur = c < n ? u[c] : 0.0;
    const double g = (cur - prev) / h;
    const double flux = p == 2.0 ? g : signed_pow(g, p - 1.0);
    if (c > 0) out[c - 1] = (flux - flux_left) / h;
    flux_left = flux;
    prev = cur;
  }
}

}  // namespace

TimeProfile::TimeProfile(std::vector<double> samples, double horizon)
    : samples_(std::move(samples)), horizon_(horizon) {
  if (samples_.empty()) throw ConfigError("time profile needs at least one sample");
  if (samples_.size() > 1 && !(horizon_ > 0.0)) throw ConfigError("time profile horizon must be > 0");
  for (double s : samples_) {
    if (!std::isfinite(s)) throw ConfigError("time profile has non-finite samples");
  }
}

double TimeProfile::at(double t) const {
  if (samples_.size() == 1) return samples_[0];
  const double pos = std::clamp(t / horizon_, 0.0, 1.0) * static_cast<double>(samples_.size() - 1);
  const auto k = std::min(static_cast<std::size_t>(pos), samples_.size() - 2);
  const double frac = pos - static_cast<double>(k);
  return (1.0 - frac) * samples_[k] + frac * samples_[k + 1];
}

const char* to_string(DriftFamily f) {
  switch (f) {
    case DriftFamily::reaction_diffusion: return "reaction_diffusion";
    case DriftFamily::porous_media: return "porous_media";
    case DriftFamily::fast_diffusion: return "fast_diffusion";
    case DriftFamily::p_laplace: return "p_laplace";
    case DriftFamily::high_order: return "high_order";
    case DriftFamily::linear: return "linear";
  }
  return "unknown";
}

DriftFamily drift_family_from_string(const std::string& s) {
  for (auto f : {DriftFamily::reaction_diffusion, DriftFamily::porous_media, DriftFamily::fast_diffusion,
                 DriftFamily::p_laplace, DriftFamily::high_order, DriftFamily::linear}) {
    if (s == to_string(f)) return f;
  }
  throw ConfigError("unknown drift family '" + s + "'");
}

double natural_alpha(const DriftSpec& spec) {
  switch (spec.family) {
    case DriftFamily::p_laplace:
    case DriftFamily::high_order: return spec.p;
    case DriftFamily::porous_media:
    case DriftFamily::fast_diffusion: return spec.r + 1.0;
    case DriftFamily::reaction_diffusion:
    case DriftFamily::linear: return 2.0;
  }
  return 2.0;
}

bool is_linear(const DriftSpec& s) {
  if (!s.eta.is_constant()) return false;
  const bool no_reaction = s.eta.at(0.0) == 0.0 || s.p_tilde == 2.0;
  switch (s.family) {
    case DriftFamily::linear: return true;
    case DriftFamily::p_laplace:
    case DriftFamily::high_order: return s.p == 2.0 && no_reaction;
    case DriftFamily::reaction_diffusion: return no_reaction;
    case DriftFamily::porous_media:
    case DriftFamily::fast_diffusion: return false;
  }
  return false;
}

void validate(const DriftSpec& s) {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(s.p) || !finite(s.p_tilde) || !finite(s.r) || !finite(s.kappa) || !finite(s.lambda)) {
    throw ConfigError("drift: non-finite parameter");
  }
  switch (s.family) {
    case DriftFamily::p_laplace:
    case DriftFamily::high_order:
      if (s.p < 1.0) throw ConfigError("drift: p must be >= 1");
      if (s.p_tilde < 1.0 || s.p_tilde > s.p) throw ConfigError("drift: p_tilde must lie in [1, p]");
      if (s.family == DriftFamily::high_order && s.order != 1) {
        throw ConfigError("drift: high_order family is implemented for order 1 only");
      }
      break;
    case DriftFamily::reaction_diffusion:
      if (s.p_tilde < 1.0 || s.p_tilde > 2.0) throw ConfigError("drift: p_tilde must lie in [1, 2]");
      break;
    case DriftFamily::porous_media:
      if (!(s.r > 1.0)) throw ConfigError("drift: porous_media requires r > 1");
      break;
    case DriftFamily::fast_diffusion:
      if (!(s.r > 0.0 && s.r < 1.0)) throw ConfigError("drift: fast_diffusion requires 0 < r < 1");
      if (s.kappa < 0.0) throw ConfigError("drift: kappa must be >= 0");
      break;
    case DriftFamily::linear:
      break;
  }
  if (!(s.declared_alpha > 1.0)) throw ConfigError("drift: declared alpha must be > 1");
  if (!(s.declared_delta > 0.0)) throw ConfigError("drift: declared delta must be > 0");
  if (!finite(s.declared_K) || s.declared_K < 0.0) throw ConfigError("drift: declared K must be >= 0");
}

void drift_apply_into(const DriftSpec& spec, const DiscreteTriple& triple, double t,
                      std::span<const double> v, std::span<double> out) {
  const std::size_t n = triple.dim();
  if (v.size() != n || out.size() != n) throw ShapeError("drift_apply: state size mismatch");
  const double h = triple.h();
  const double eta = spec.eta.at(t);

  switch (spec.family) {
    case DriftFamily::linear:
      for (std::size_t i = 0; i < n; ++i) out[i] = -spec.lambda * v[i];
      break;
    case DriftFamily::p_laplace:
    case DriftFamily::high_order:
      p_laplacian(v, h, spec.p, out);
      if (eta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) out[i] -= eta * signed_pow(v[i], spec.p_tilde - 1.0);
      }
      break;
    case DriftFamily::reaction_diffusion:
      laplacian_of(v, h, [](double x) { return x; }, out);
      if (eta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) out[i] -= eta * signed_pow(v[i], spec.p_tilde - 1.0);
      }
      break;
    case DriftFamily::porous_media:
      laplacian_of(v, h, [r = spec.r](double x) { return signed_pow(x, r); }, out);
      if (eta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) out[i] += eta * v[i];
      }
      break;
    case DriftFamily::fast_diffusion:
      laplacian_of(v, h, [r = spec.r, k = spec.kappa](double x) { return psi_kappa(x, r, k); }, out);
      if (eta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) out[i] += eta * v[i];
      }
      break;
  }
  check_finite(out, triple, v, "drift_apply");
}

StateVector drift_apply(const DriftSpec& spec, double t, const StateVector& v) {
  std::vector<double> out(v.size());
  drift_apply_into(spec, *v.triple, t, v.values, out);
  return StateVector(v.triple, std::move(out));
}

Tridiagonal drift_jacobian(const DriftSpec& spec, const DiscreteTriple& triple, double t,
                           std::span<const double> v) {
  const std::size_t n = triple.dim();
  if (v.size() != n) throw ShapeError("drift_jacobian: state size mismatch");
  const double h = triple.h();
  const double inv_h2 = 1.0 / (h * h);
  const double eta = spec.eta.at(t);
  Tridiagonal J(n);

  auto pointwise_laplacian = [&](auto&& dpsi) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = dpsi(v[i]) * inv_h2;
      J.diag[i] = -2.0 * d;
      if (i > 0) J.upper[i - 1] = d;      // ∂A_{i-1}/∂v_i
      if (i + 1 < n) J.lower[i] = d;      // ∂A_{i+1}/∂v_i
    }
  };

  switch (spec.family) {
    case DriftFamily::linear:
      for (std::size_t i = 0; i < n; ++i) J.diag[i] = -spec.lambda;
      break;
    case DriftFamily::p_laplace:
    case DriftFamily::high_order: {
      // cell c sits between interior nodes c-1 and c
      std::vector<double> dflux(n + 1);
      double prev = 0.0;
      for (std::size_t c = 0; c <= n; ++c) {
        const double cur = c < n ? v[c] : 0.0;
        dflux[c] = signed_pow_derivative((cur - prev) / h, spec.p - 1.0);
        prev = cur;
      }
      for (std::size_t i = 0; i < n; ++i) {
        J.diag[i] = -(dflux[i] + dflux[i + 1]) * inv_h2;
        if (i + 1 < n) {
          J.upper[i] = dflux[i + 1] * inv_h2;
          J.lower[i] = dflux[i + 1] * inv_h2;
        }
        if (eta != 0.0) J.diag[i] -= eta * signed_pow_derivative(v[i], spec.p_tilde - 1.0);
      }
      break;
    }
    case DriftFamily::reaction_diffusion:
      pointwise_laplacian([](double) { return 1.0; });
      if (eta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) J.diag[i] -= eta * signed_pow_derivative(v[i], spec.p_tilde - 1.0);
      }
      break;
    case DriftFamily::porous_media:
      pointwise_laplacian([r = spec.r](double x) { return signed_pow_derivative(x, r); });
      for (std::size_t i = 0; i < n; ++i) J.diag[i] += eta;
      break;
    case DriftFamily::fast_diffusion:
      pointwise_laplacian([r = spec.r, k = spec.kappa](double x) { return psi_kappa_derivative(x, r, k); });
      for (std::size_t i = 0; i < n; ++i) J.diag[i] += eta;
      break;
  }
  return J;
}

double StateFunctional::value(const DiscreteTriple& t, std::span<const double> v) const {
  if (kind == Kind::constant) return c0;
  const double s = h_inner(t, g, v);
  return kind == Kind::affine ? c0 + c1 * s : c0 + c1 * std::tanh(s);
}

void StateFunctional::add_gradient(const DiscreteTriple& t, std::span<const double> v, double scale,
                                   std::span<double> out) const {
  if (kind == Kind::constant || scale == 0.0) return;
  double factor = c1;
  if (kind == Kind::saturating) {
    const double th = std::tanh(h_inner(t, g, v));
    factor *= 1.0 - th * th;
  }
  const double w = t.h() * factor * scale;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * g[i];
}

double StateFunctional::lipschitz(const DiscreteTriple& t) const {
  if (kind == Kind::constant) return 0.0;
  return std::abs(c1) * h_norm(t, g);
}

bool NoiseSpec::state_dependent() const {
  if (form != NoiseForm::finite_rank) return false;
  return std::any_of(terms.begin(), terms.end(),
                     [](const NoiseTerm& term) { return term.coeff.kind != StateFunctional::Kind::constant; });
}

void validate(const NoiseSpec& spec, const DiscreteTriple& triple) {
  if (spec.form == NoiseForm::finite_rank) {
    for (const auto& term : spec.terms) {
      if (term.shape.size() != triple.dim()) throw ConfigError("noise: mode shape size mismatch");
      if (term.coeff.kind != StateFunctional::Kind::constant && term.coeff.g.size() != triple.dim()) {
        throw ConfigError("noise: functional direction size mismatch");
      }
      if (!std::isfinite(term.coeff.c0) || !std::isfinite(term.coeff.c1)) {
        throw ConfigError("noise: non-finite functional coefficients");
      }
      for (double x : term.shape) {
        if (!std::isfinite(x)) throw ConfigError("noise: non-finite mode shape");
      }
    }
  } else {
    if (spec.decay_modes < 0 || static_cast<std::size_t>(spec.decay_modes) > triple.dim()) {
      throw ConfigError("noise: diagonal_decay modes must lie in [0, interior dimension]");
    }
    if (!(spec.decay_rate > 0.5)) throw ConfigError("noise: decay_rate must exceed 1/2");
    if (!std::isfinite(spec.amplitude)) throw ConfigError("noise: non-finite amplitude");
  }
}

void noise_column_into(const NoiseSpec& spec, const DiscreteTriple& triple, double t,
                       std::span<const double> v, std::size_t j, std::span<double> out) {
  if (spec.form == NoiseForm::finite_rank) {
    const NoiseTerm& term = spec.terms.at(j);
    const double b = term.coeff.value(triple, v) * term.profile.at(t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = b * term.shape[i];
  } else {
    const auto e = triple.sine_mode(j + 1);
    const double scale = spec.amplitude * std::pow(static_cast<double>(j + 1), -spec.decay_rate);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * e[i];
  }
}

void noise_apply_into(const NoiseSpec& spec, const DiscreteTriple& triple, double t,
                      std::span<const double> v, std::span<const double> direction,
                      std::span<double> out) {
  const std::size_t m = spec.modes();
  if (direction.size() != m) {
    throw ShapeError("noise_apply: direction has " + std::to_string(direction.size()) +
                     " entries, noise has " + std::to_string(m) + " modes");
  }
  if (out.size() != triple.dim() || v.size() != triple.dim()) throw ShapeError("noise_apply: state size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  if (spec.form == NoiseForm::finite_rank) {
    for (std::size_t j = 0; j < m; ++j) {
      if (direction[j] == 0.0) continue;
      const NoiseTerm& term = spec.terms[j];
      const double b = term.coeff.value(triple, v) * term.profile.at(t) * direction[j];
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += b * term.shape[i];
    }
  } else {
    for (std::size_t j = 0; j < m; ++j) {
      if (direction[j] == 0.0) continue;
      const auto e = triple.sine_mode(j + 1);
      const double b = spec.amplitude * std::pow(static_cast<double>(j + 1), -spec.decay_rate) * direction[j];
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += b * e[i];
    }
  }
}

StateVector noise_apply(const NoiseSpec& spec, double t, const StateVector& v,
                        std::span<const double> direction) {
  std::vector<double> out(v.size());
  noise_apply_into(spec, *v.triple, t, v.values, direction, out);
  return StateVector(v.triple, std::move(out));
}

void noise_transpose_into(const NoiseSpec& spec, const DiscreteTriple& triple, double t,
                          std::span<const double> v, std::span<const double> mu,
                          std::span<double> out) {
  std::vector<double> col(triple.dim());
  for (std::size_t j = 0; j < spec.modes(); ++j) {
    noise_column_into(spec, triple, t, v, j, col);
    double s = 0.0;
    for (std::size_t i = 0; i < col.size(); ++i) s += col[i] * mu[i];
    out[j] = s;
  }
}

void noise_state_vjp(const NoiseSpec& spec, const DiscreteTriple& triple, double t,
                     std::span<const double> v, std::span<const double> direction,
                     std::span<const double> mu, std::span<double> out) {
  if (!spec.state_dependent()) return;
  for (std::size_t j = 0; j < spec.terms.size(); ++j) {
    const NoiseTerm& term = spec.terms[j];
    if (term.coeff.kind == StateFunctional::Kind::constant || direction[j] == 0.0) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) s += term.shape[i] * mu[i];
    term.coeff.add_gradient(triple, v, direction[j] * term.profile.at(t) * s, out);
  }
}

double hs_norm(const NoiseSpec& spec, const DiscreteTriple& triple, double t, std::span<const double> v) {
  std::vector<double> col(triple.dim());
  double s = 0.0;
  for (std::size_t j = 0; j < spec.modes(); ++j) {
    noise_column_into(spec, triple, t, v, j, col);
    s += h_inner(triple, col, col);
  }
  return std::sqrt(s);
}

double hs_norm(const NoiseSpec& spec, double t, const StateVector& v) {
  return hs_norm(spec, *v.triple, t, v.values);
}

double hs_truncation_tail(const NoiseSpec& spec) {
  if (spec.form != NoiseForm::diagonal_decay) return 0.0;
  const double two_gamma = 2.0 * spec.decay_rate;
  double head = 0.0;
  for (int j = 1; j <= spec.decay_modes; ++j) head += std::pow(static_cast<double>(j), -two_gamma);
  const double tail = std::riemann_zeta(two_gamma) - head;
  return std::abs(spec.amplitude) * std::sqrt(std::max(tail, 0.0));
}

}  // namespace mldp
