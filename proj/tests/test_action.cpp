#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "mldp/action.hpp"
#include "mldp/errors.hpp"
#include "mldp/parallel.hpp"
#include "support.hpp"

using namespace mldp;

namespace {

SolverConfig solver(double T, int n) {
  SolverConfig c;
  c.T = T;
  c.n_steps = n;
  return c;
}

// central differences of J on every control entry
std::vector<double> fd_gradient(const ControlPath& phi, const StateVector& x0, const ConstraintSpec& c, double beta,
                                const DriftSpec& d, const NoiseSpec& n, const SolverConfig& cfg, double step) {
  std::vector<double> g(phi.values.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto p = phi, m = phi;
    p.values[i] += step;
    m.values[i] -= step;
    g[i] = (action_gradient(p, x0, c, beta, d, n, cfg).value - action_gradient(m, x0, c, beta, d, n, cfg).value) /
           (2.0 * step);
  }
  return g;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / den;
}

struct Heat {
  TriplePtr triple = build_triple(0.0, 1.0, 8, 2.0);
  DriftSpec drift;
  NoiseSpec noise;
  Heat() {
    drift.family = DriftFamily::p_laplace;
    drift.p = 2.0;
    drift.declared_delta = 2.0;
    for (int j = 1; j <= 2; ++j) {
      NoiseTerm term;
      auto m = triple->sine_mode(j);
      term.shape.assign(m.begin(), m.end());
      noise.terms.push_back(term);
    }
  }
  StateVector x0() const {
    return StateVector::sample(triple, [](double x) { return 0.3 * std::sin(M_PI * x); });
  }
  ConstraintSpec first_mode_above(double c) const {
    ConstraintSpec e;
    auto m = triple->sine_mode(1);
    e.weights.assign(m.begin(), m.end());
    e.threshold = c;
    return e;
  }
};

}  // namespace

TEST_CASE("control energy") {
  auto cfg = solver(2.0, 10);
  auto zero = ControlPath::zeros(cfg, 2);
  CHECK(control_energy(zero) == 0.0);
  auto c = ControlPath::zeros(cfg, 1);
  for (auto& v : c.values) v = 1.5;
  CHECK(control_energy(c) == doctest::Approx(0.5 * 1.5 * 1.5 * 2.0).epsilon(1e-14));
  std::mt19937_64 rng(3);
  auto r = ControlPath::zeros(cfg, 3);
  r.values = testing::random_vector(rng, r.values.size());
  auto r2 = r;
  for (auto& v : r2.values) v *= 2.0;
  CHECK(control_energy(r2) == doctest::Approx(4.0 * control_energy(r)).epsilon(1e-14));
}

TEST_CASE("constraint violations") {
  testing::ScalarOu ou;
  auto e = ou.event(1.0);
  std::vector<double> z{0.4};
  CHECK(e.terminal_violation(*ou.triple, z) == doctest::Approx(0.6));
  z[0] = 1.2;
  CHECK(e.terminal_violation(*ou.triple, z) == 0.0);
  e.threshold = -std::numeric_limits<double>::infinity();
  CHECK(e.terminal_violation(*ou.triple, z) == 0.0);
  e.threshold = std::numeric_limits<double>::infinity();
  CHECK(std::isinf(e.terminal_violation(*ou.triple, z)));
  CHECK_THROWS_AS(validate(e, *ou.triple, solver(1.0, 10)), ConfigError);
  CHECK_NOTHROW(validate(e, *ou.triple, solver(1.0, 10), true));
  e.weights = {1.0, 2.0};
  CHECK_THROWS_AS(validate(e, *ou.triple, solver(1.0, 10), true), ShapeError);
}

TEST_CASE("gradient vanishes when the free path is already in the target") {
  Heat heat;
  auto cfg = solver(0.5, 20);
  auto obj = action_gradient(ControlPath::zeros(cfg, 2), heat.x0(), heat.first_mode_above(-1.0), 100.0, heat.drift,
                             heat.noise, cfg);
  CHECK(obj.value == 0.0);
  CHECK(obj.violation == 0.0);
  for (double g : obj.gradient.values) CHECK(g == 0.0);
}

TEST_CASE("adjoint matches the closed-form LQ gradient") {
  // z_N = a^N x0 + Σ_k a^{N-k} dt σ φ_k with a = 1/(1 + λ dt)
  testing::ScalarOu ou;
  std::mt19937_64 rng(71);
  for (int rep = 0; rep < 5; ++rep) {
    auto cfg = solver(1.0, 50);
    const double dt = cfg.dt(), a = 1.0 / (1.0 + ou.lambda * dt), beta = 37.0, c = 1.0, x0 = 0.2;
    auto phi = ControlPath::zeros(cfg, 1);
    phi.values = testing::random_vector(rng, 50, 0.5);
    double zN = std::pow(a, 50) * x0;
    for (int k = 0; k < 50; ++k) zN += std::pow(a, 50 - k) * dt * ou.sigma * phi.values[k];
    const double v = std::max(0.0, c - zN);
    REQUIRE(v > 0.0);
    auto obj = action_gradient(phi, ou.state(x0), ou.event(c), beta, ou.drift, ou.noise, cfg);
    CHECK(obj.violation == doctest::Approx(v).epsilon(1e-13));
    CHECK(obj.value == doctest::Approx(control_energy(phi) + beta * v * v).epsilon(1e-13));
    for (int k = 0; k < 50; ++k) {
      const double exact = dt * phi.values[k] - 2.0 * beta * v * dt * ou.sigma * std::pow(a, 50 - k);
      CHECK(std::abs(obj.gradient.values[k] - exact) <= 1e-10);
    }
  }
}

TEST_CASE("adjoint matches central differences on the heat equation") {
  Heat heat;
  auto cfg = solver(0.5, 20);
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    auto phi = ControlPath::zeros(cfg, 2);
    phi.values = testing::random_vector(rng, phi.values.size());
    auto e = heat.first_mode_above(2.0);
    auto obj = action_gradient(phi, heat.x0(), e, 50.0, heat.drift, heat.noise, cfg);
    REQUIRE(obj.violation > 0.0);
    auto fd = fd_gradient(phi, heat.x0(), e, 50.0, heat.drift, heat.noise, cfg, 1e-4);
    CHECK(max_relative_error(obj.gradient.values, fd) <= 1e-5);
  }
}

TEST_CASE("adjoint handles nonlinear drift, state-dependent noise and a terminal ball") {
  auto t = build_triple(0.0, 1.0, 10, 3.0);
  DriftSpec d;
  d.family = DriftFamily::p_laplace;
  d.p = 3.0;
  d.p_tilde = 2.0;
  d.eta = TimeProfile(1.0);
  d.declared_alpha = 3.0;
  d.declared_delta = 0.5;
  NoiseSpec noise;
  NoiseTerm term;
  term.shape = StateVector::sample(t, [](double x) { return x * (1.0 - x) * 4.0; }).values;
  term.coeff.kind = StateFunctional::Kind::saturating;
  term.coeff.c0 = 1.0;
  term.coeff.c1 = 0.4;
  term.coeff.g.assign(t->dim(), 1.0);
  term.profile = TimeProfile({1.0, 0.5}, 0.4);
  noise.terms.push_back(term);
  auto cfg = solver(0.4, 16);
  ConstraintSpec ball;
  ball.kind = ConstraintKind::terminal_state;
  ball.target_state = StateVector::sample(t, [](double x) { return std::sin(M_PI * x); }).values;
  ball.tolerance = 0.05;
  auto x0 = StateVector::sample(t, [](double x) { return 0.2 * std::sin(2 * M_PI * x); });
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 4; ++rep) {
    auto phi = ControlPath::zeros(cfg, 1);
    phi.values = testing::random_vector(rng, phi.values.size());
    auto obj = action_gradient(phi, x0, ball, 20.0, d, noise, cfg);
    REQUIRE(obj.violation > 0.0);
    auto fd = fd_gradient(phi, x0, ball, 20.0, d, noise, cfg, 1e-5);
    CHECK(max_relative_error(obj.gradient.values, fd) <= 1e-5);
  }
}

TEST_CASE("scalar OU minimal action matches the LQ formula") {
  testing::ScalarOu ou;
  auto cfg = solver(1.0, 200);
  OptimizerSettings opt;
  opt.seed = 11;
  auto r = minimize_action(ou.event(1.0), ou.state(0.0), ou.drift, ou.noise, cfg, opt);
  const double exact = ou.action(1.0, 0.0, 1.0);
  CHECK(exact == doctest::Approx(1.0 / (1.0 - std::exp(-2.0))).epsilon(1e-14));
  CHECK(r.feasible);
  CHECK(r.converged);
  CHECK(std::abs(r.value / exact - 1.0) <= 0.01);
  CHECK(r.value == doctest::Approx(control_energy(r.minimizer)).epsilon(1e-12));
  CHECK(r.multi_start_values.size() == 4);
  CHECK_FALSE(r.starts_disagree);
  for (const auto& s : r.starts) {
    for (std::size_t k = 1; k < s.violation_history.size(); ++k) {
      CHECK(s.violation_history[k] <= s.violation_history[k - 1] + 1e-12);
    }
  }
}

TEST_CASE("doubling the threshold quadruples the action") {
  testing::ScalarOu ou;
  auto cfg = solver(1.0, 200);
  OptimizerSettings opt;
  opt.n_starts = 2;
  auto a = minimize_action(ou.event(1.0), ou.state(0.0), ou.drift, ou.noise, cfg, opt);
  auto b = minimize_action(ou.event(2.0), ou.state(0.0), ou.drift, ou.noise, cfg, opt);
  CHECK(std::abs(b.value / a.value - 4.0) <= 0.08);
}

TEST_CASE("action vanishes when the free path already lies in the target") {
  Heat heat;
  auto cfg = solver(0.5, 20);
  auto r = minimize_action(heat.first_mode_above(0.0), heat.x0(), heat.drift, heat.noise, cfg);
  CHECK(r.feasible);
  CHECK(r.value == 0.0);
  for (double v : r.minimizer.values) CHECK(v == 0.0);
}

TEST_CASE("minimal action never exceeds the energy of a feasible start") {
  testing::ScalarOu ou;
  auto cfg = solver(1.0, 100);
  std::mt19937_64 rng(19);
  WorkerPool pool(2);
  for (int rep = 0; rep < 100; ++rep) {
    auto phi = ControlPath::zeros(cfg, 1);
    phi.values = testing::random_vector(rng, 100, 2.0);
    for (auto& v : phi.values) v += 2.0;
    auto obj = action_gradient(phi, ou.state(0.0), ou.event(1.0), 1.0, ou.drift, ou.noise, cfg);
    if (obj.violation > 0.0) continue;
    OptimizerSettings opt;
    opt.n_starts = 1;
    opt.max_iterations = 30;
    opt.extra_starts.push_back(phi);
    auto r = minimize_action(ou.event(1.0), ou.state(0.0), ou.drift, ou.noise, cfg, opt, &pool);
    CHECK(r.feasible);
    CHECK(r.value >= 0.0);
    CHECK(r.value <= control_energy(phi) + 1e-8);
  }
}

TEST_CASE("unreachable targets are reported as infeasible") {
  Heat heat;
  for (auto& term : heat.noise.terms) std::fill(term.shape.begin(), term.shape.end(), 0.0);
  auto cfg = solver(0.5, 10);
  OptimizerSettings opt;
  opt.n_starts = 2;
  auto r = minimize_action(heat.first_mode_above(1.0), heat.x0(), heat.drift, heat.noise, cfg, opt);
  CHECK_FALSE(r.feasible);
  CHECK(r.violation > 0.0);
  auto j = to_json(r);
  CHECK(j["feasible"] == false);
  CHECK(j["value"].is_null());
}

TEST_CASE("multi-start results are independent of the pool size") {
  auto t = build_triple(0.0, 1.0, 16, 3.0);
  DriftSpec d;
  d.family = DriftFamily::p_laplace;
  d.p = 3.0;
  d.p_tilde = 2.0;
  d.declared_alpha = 3.0;
  d.declared_delta = 0.5;
  NoiseSpec noise;
  NoiseTerm term;
  term.shape.assign(t->dim(), 1.0);
  noise.terms.push_back(term);
  ConstraintSpec e;
  auto m = t->sine_mode(1);
  e.weights.assign(m.begin(), m.end());
  e.threshold = 0.5;
  auto cfg = solver(0.5, 40);
  OptimizerSettings opt;
  opt.n_starts = 3;
  opt.seed = 4;
  WorkerPool one(1), three(3);
  auto x0 = StateVector::zeros(t);
  auto a = minimize_action(e, x0, d, noise, cfg, opt, &one);
  auto b = minimize_action(e, x0, d, noise, cfg, opt, &three);
  CHECK(a.feasible);
  CHECK(a.minimizer.values == b.minimizer.values);
  CHECK(a.multi_start_values == b.multi_start_values);
  CHECK(to_json(a).dump() == to_json(b).dump());
}
