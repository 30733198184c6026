#include "mldp/gelfand.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mldp/errors.hpp"

namespace mldp {

namespace {

void check_shape(const DiscreteTriple& t, std::span<const double> u, const char* what) {
  if (u.size() != t.dim()) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(t.dim()) +
                     " interior values, got " + std::to_string(u.size()));
  }
}

void check_same(const StateVector& u, const StateVector& v) {
  if (!u.triple || !v.triple || !u.triple->same_grid(*v.triple)) {
    throw ShapeError("state vectors belong to different triples");
  }
}

}  // namespace

std::span<const double> DiscreteTriple::sine_mode(std::size_t k) const {
  if (k < 1 || k > dim()) {
    throw ConfigError("sine mode index " + std::to_string(k) + " outside [1, " +
                      std::to_string(dim()) + "]");
  }
  return std::span<const double>(mode_table).subspan((k - 1) * dim(), dim());
}

double DiscreteTriple::laplacian_eigenvalue(std::size_t k) const {
  const double s = std::sin(std::numbers::pi * static_cast<double>(k) / (2.0 * n_cells));
  return -4.0 * s * s / (h() * h());
}

bool DiscreteTriple::same_grid(const DiscreteTriple& other) const {
  return this == &other || (n_cells == other.n_cells && domain_left == other.domain_left &&
                            domain_right == other.domain_right);
}

TriplePtr build_triple(double domain_left, double domain_right, int n_cells, double alpha) {
  if (!std::isfinite(domain_left) || !std::isfinite(domain_right) || !std::isfinite(alpha)) {
    throw ConfigError("triple: non-finite parameter");
  }
  if (n_cells < 2) throw ConfigError("triple: n_cells must be >= 2");
  if (!(domain_right > domain_left)) throw ConfigError("triple: domain_right must exceed domain_left");
  if (!(alpha > 1.0)) throw ConfigError("triple: alpha must be > 1");

  auto t = std::make_shared<DiscreteTriple>();
  t->domain_left = domain_left;
  t->domain_right = domain_right;
  t->n_cells = n_cells;
  t->alpha = alpha;
  t->dirichlet = true;

  const double h = t->h();
  t->node_positions.resize(n_cells + 1);
  t->quad_weights.assign(n_cells + 1, h);
  for (int i = 0; i <= n_cells; ++i) t->node_positions[i] = domain_left + i * h;
  t->node_positions[n_cells] = domain_right;
  t->quad_weights.front() = 0.5 * h;
  t->quad_weights.back() = 0.5 * h;

  const std::size_t n = t->dim();
  const double scale = std::sqrt(2.0 / t->length());
  t->mode_table.resize(n * n);
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t i = 1; i <= n; ++i) {
      t->mode_table[(k - 1) * n + (i - 1)] =
          scale * std::sin(std::numbers::pi * static_cast<double>(k * i) / n_cells);
    }
  }
  return t;
}

TriplePtr with_alpha(const TriplePtr& triple, double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ConfigError("triple: alpha must be > 1");
  if (triple->alpha == alpha) return triple;
  auto copy = std::make_shared<DiscreteTriple>(*triple);
  copy->alpha = alpha;
  return copy;
}

StateVector::StateVector(TriplePtr t, std::vector<double> v) : triple(std::move(t)), values(std::move(v)) {
  if (!triple) throw ShapeError("state vector without triple");
  check_shape(*triple, values, "state vector");
  for (double x : values) {
    if (!std::isfinite(x)) throw NumericError("state vector has non-finite entries", x);
  }
}

StateVector StateVector::zeros(TriplePtr t) {
  const std::size_t n = t->dim();
  return StateVector(std::move(t), std::vector<double>(n, 0.0));
}

double h_inner(const DiscreteTriple& t, std::span<const double> u, std::span<const double> v) {
  check_shape(t, u, "h_inner");
  check_shape(t, v, "h_inner");
  const double h = t.h();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return h * s;
}

double h_norm(const DiscreteTriple& t, std::span<const double> u) {
  return std::sqrt(h_inner(t, u, u));
}

double v_norm_pow(const DiscreteTriple& t, std::span<const double> u, double alpha) {
  check_shape(t, u, "v_norm");
  const double h = t.h();
  const std::size_t n = u.size();
  double s = 0.0;
  double prev = 0.0;
  for (std::size_t c = 0; c <= n; ++c) {
    const double cur = c < n ? u[c] : 0.0;
    const double g = std::abs(cur - prev) / h;
    s += alpha == 2.0 ? g * g : std::pow(g, alpha);
    prev = cur;
  }
  return h * s;
}

double v_norm(const DiscreteTriple& t, std::span<const double> u) {
  return std::pow(v_norm_pow(t, u, t.alpha), 1.0 / t.alpha);
}

void project_into(const DiscreteTriple& t, std::span<const double> u, std::size_t n,
                  std::span<double> out) {
  check_shape(t, u, "project");
  check_shape(t, out, "project");
  if (n < 1 || n > t.dim()) {
    throw ConfigError("projection rank " + std::to_string(n) + " outside [1, " +
                      std::to_string(t.dim()) + "]");
  }
  if (n == t.dim()) {
    std::copy(u.begin(), u.end(), out.begin());
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const auto e = t.sine_mode(k);
    const double c = h_inner(t, u, e);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * e[i];
  }
}

double h_inner(const StateVector& u, const StateVector& v) {
  check_same(u, v);
  return h_inner(*u.triple, u.values, v.values);
}

double h_norm(const StateVector& u) { return h_norm(*u.triple, u.values); }

double v_norm(const StateVector& u) { return v_norm(*u.triple, u.values); }

StateVector project(const StateVector& u, std::size_t n) {
  std::vector<double> out(u.size());
  project_into(*u.triple, u.values, n, out);
  return StateVector(u.triple, std::move(out));
}

const char* to_string(PathKind kind) {
  switch (kind) {
    case PathKind::sde_sample: return "sde_sample";
    case PathKind::skeleton: return "skeleton";
    case PathKind::galerkin: return "galerkin";
  }
  return "unknown";
}

std::vector<double> uniform_time_grid(double T, int n_steps) {
  std::vector<double> grid(n_steps + 1);
  const double dt = T / n_steps;
  for (int k = 0; k <= n_steps; ++k) grid[k] = k * dt;
  grid[n_steps] = T;
  return grid;
}

double path_metric(const PathRecord& f, const PathRecord& g) {
  if (!f.triple || !g.triple || !f.triple->same_grid(*g.triple) || f.triple->alpha != g.triple->alpha) {
    throw ShapeError("path_metric: paths on different triples");
  }
  if (f.time_grid != g.time_grid) throw ShapeError("path_metric: time grids differ");
  if (f.states.size() != g.states.size()) throw ShapeError("path_metric: state shapes differ");

  const DiscreteTriple& t = *f.triple;
  const std::size_t nt = f.n_times();
  std::vector<double> diff(t.dim());
  double sup_h = 0.0;
  double integral = 0.0;
  double prev_v = 0.0;
  for (std::size_t k = 0; k < nt; ++k) {
    const auto a = f.row(k);
    const auto b = g.row(k);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a[i] - b[i];
    sup_h = std::max(sup_h, h_norm(t, diff));
    const double cur_v = v_norm_pow(t, diff, t.alpha);
    if (k > 0) integral += 0.5 * (f.time_grid[k] - f.time_grid[k - 1]) * (prev_v + cur_v);
    prev_v = cur_v;
  }
  return sup_h + std::pow(integral, 1.0 / t.alpha);
}

}  // namespace mldp
