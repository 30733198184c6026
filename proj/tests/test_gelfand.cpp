#include "doctest.h"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "mldp/errors.hpp"
#include "mldp/gelfand.hpp"
#include "support.hpp"

using namespace mldp;

TEST_CASE("uniform grid on the unit interval") {
  auto t = build_triple(0.0, 1.0, 4, 2.0);
  REQUIRE(t->node_positions.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(t->node_positions[i] == doctest::Approx(0.25 * i).epsilon(1e-15));
  CHECK(t->dim() == 3);
  CHECK(t->dirichlet);
}

TEST_CASE("build_triple rejects bad parameters") {
  CHECK_THROWS_AS(build_triple(0.0, 1.0, 1, 2.0), ConfigError);
  CHECK_THROWS_AS(build_triple(1.0, 1.0, 4, 2.0), ConfigError);
  CHECK_THROWS_AS(build_triple(0.0, 1.0, 4, 1.0), ConfigError);
  CHECK_THROWS_AS(build_triple(0.0, 1.0, 4, 0.5), ConfigError);
  CHECK_THROWS_AS(build_triple(0.0, std::nan(""), 4, 2.0), ConfigError);
}

TEST_CASE("trapezoid weights sum to the interval length") {
  auto t = build_triple(0.0, std::numbers::pi, 64, 3.0);
  const double sum = std::accumulate(t->quad_weights.begin(), t->quad_weights.end(), 0.0);
  CHECK(std::abs(sum - std::numbers::pi) <= 1e-12 * std::numbers::pi);
  for (std::size_t i = 1; i < t->node_positions.size(); ++i) {
    CHECK(t->node_positions[i] > t->node_positions[i - 1]);
  }
}

TEST_CASE("h_inner hand values") {
  auto t = build_triple(0.0, 1.0, 4, 2.0);
  auto x = StateVector::sample(t, [](double s) { return s; });
  CHECK(h_inner(x, x) == doctest::Approx(0.21875).epsilon(1e-14));
  auto one = StateVector(t, {1.0, 1.0, 1.0});
  CHECK(h_inner(one, one) == doctest::Approx(0.75).epsilon(1e-14));
  auto zero = StateVector::zeros(t);
  CHECK(h_inner(zero, zero) == 0.0);
}

TEST_CASE("h_inner rejects states from different grids") {
  auto a = StateVector::zeros(build_triple(0.0, 1.0, 4, 2.0));
  auto b = StateVector::zeros(build_triple(0.0, 1.0, 8, 2.0));
  CHECK_THROWS_AS(h_inner(a, b), ShapeError);
}

TEST_CASE("h_inner integrates the nodal interpolant of the product exactly") {
  // trapezoid equals the exact integral of the piecewise-linear interpolant of u·v
  auto t = build_triple(-1.0, 2.0, 13, 2.0);
  std::mt19937_64 rng(11);
  auto u = testing::random_vector(rng, t->dim());
  auto v = testing::random_vector(rng, t->dim());
  std::vector<double> f(t->dim() + 2, 0.0);
  for (std::size_t i = 0; i < t->dim(); ++i) f[i + 1] = u[i] * v[i];
  double exact = 0.0;
  for (std::size_t c = 0; c + 1 < f.size(); ++c) {
    const double a = t->node_positions[c], b = t->node_positions[c + 1];
    // ∫ of the line through (a, f_c), (b, f_{c+1}) by Simpson, exact for linear integrands
    const double mid = 0.5 * (f[c] + f[c + 1]);
    exact += (b - a) / 6.0 * (f[c] + 4.0 * mid + f[c + 1]);
  }
  CHECK(std::abs(h_inner(*t, u, v) - exact) <= 1e-12 * std::max(1.0, std::abs(exact)));
}

TEST_CASE("v_norm hand values") {
  auto t = build_triple(0.0, 1.0, 2, 2.0);
  CHECK(v_norm(StateVector(t, {1.0})) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(v_norm(StateVector::zeros(t)) == 0.0);
  auto t4 = build_triple(0.0, 1.0, 9, 3.0);
  std::mt19937_64 rng(3);
  StateVector u(t4, testing::random_vector(rng, t4->dim()));
  StateVector scaled(t4, u.values);
  for (auto& x : scaled.values) x *= -3.0;
  CHECK(v_norm(scaled) == doctest::Approx(3.0 * v_norm(u)).epsilon(1e-13));
}

TEST_CASE("Cauchy-Schwarz on random pairs") {
  auto t = build_triple(0.0, 1.0, 17, 2.0);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 1000; ++k) {
    StateVector u(t, testing::random_vector(rng, t->dim()));
    StateVector v(t, testing::random_vector(rng, t->dim()));
    CHECK(std::abs(h_inner(u, v)) <= h_norm(u) * h_norm(v) * (1.0 + 1e-14));
  }
}

TEST_CASE("discrete Poincare inequality with the first eigenvalue") {
  // α = 2: ‖u‖_V² = ⟨−Δ_h u, u⟩_H ≥ μ₁‖u‖_H²
  auto t = build_triple(0.0, 1.0, 32, 2.0);
  const double c = 1.0 / std::sqrt(-t->laplacian_eigenvalue(1));
  CHECK(h_norm(*t, t->sine_mode(1)) == doctest::Approx(c * v_norm(*t, t->sine_mode(1))).epsilon(1e-12));
  std::mt19937_64 rng(8);
  for (int k = 0; k < 200; ++k) {
    StateVector u(t, testing::random_vector(rng, t->dim()));
    CHECK(h_norm(u) <= c * v_norm(u) * (1.0 + 1e-12));
  }
}

TEST_CASE("sine modes are H-orthonormal and diagonalize the stencil") {
  auto t = build_triple(0.0, 2.0, 10, 2.0);
  const double h = t->h();
  for (std::size_t j = 1; j <= t->dim(); ++j) {
    for (std::size_t k = 1; k <= t->dim(); ++k) {
      CHECK(h_inner(*t, t->sine_mode(j), t->sine_mode(k)) == doctest::Approx(j == k ? 1.0 : 0.0).epsilon(1e-12));
    }
    const double mu = 4.0 / (h * h) * std::pow(std::sin(j * std::numbers::pi * h / (2.0 * t->length())), 2);
    CHECK(t->laplacian_eigenvalue(j) == doctest::Approx(-mu).epsilon(1e-12));
  }
}

TEST_CASE("projection onto sine modes") {
  auto t = build_triple(0.0, 1.0, 12, 2.0);
  std::mt19937_64 rng(21);
  StateVector u(t, testing::random_vector(rng, t->dim()));
  CHECK(testing::max_abs_diff(project(u, t->dim()).values, u.values) <= 1e-12);
  for (std::size_t n = 1; n <= t->dim(); ++n) {
    auto p = project(u, n);
    CHECK(testing::max_abs_diff(project(p, n).values, p.values) <= 1e-12);
    CHECK(h_norm(p) <= h_norm(u) * (1.0 + 1e-14));
  }
  auto s1 = t->sine_mode(1), s2 = t->sine_mode(2);
  StateVector m1(t, {s1.begin(), s1.end()}), m2(t, {s2.begin(), s2.end()});
  CHECK(testing::max_abs_diff(project(m1, 1).values, m1.values) <= 1e-12);
  CHECK(h_norm(project(m2, 1)) <= 1e-12);
  CHECK_THROWS_AS(project(u, 0), ConfigError);
  CHECK_THROWS_AS(project(u, t->dim() + 1), ConfigError);
}

namespace {

PathRecord random_path(const TriplePtr& t, std::mt19937_64& rng, int n_steps, double T) {
  PathRecord p;
  p.triple = t;
  p.time_grid = uniform_time_grid(T, n_steps);
  p.states = testing::random_vector(rng, (n_steps + 1) * t->dim());
  return p;
}

}  // namespace

TEST_CASE("uniform time grid") {
  auto g = uniform_time_grid(2.5, 10);
  REQUIRE(g.size() == 11);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 2.5);
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(std::abs(g[k] - g[k - 1] - 0.25) <= 1e-12);
}

TEST_CASE("path metric closed form for constant paths") {
  auto t = build_triple(0.0, 1.0, 8, 3.0);
  std::mt19937_64 rng(4);
  auto a = testing::random_vector(rng, t->dim());
  auto b = testing::random_vector(rng, t->dim());
  const double T = 2.0;
  PathRecord f, g;
  f.triple = g.triple = t;
  f.time_grid = g.time_grid = uniform_time_grid(T, 7);
  for (int k = 0; k <= 7; ++k) {
    f.states.insert(f.states.end(), a.begin(), a.end());
    g.states.insert(g.states.end(), b.begin(), b.end());
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
  const double expected = h_norm(*t, d) + std::pow(T, 1.0 / 3.0) * v_norm(*t, d);
  CHECK(path_metric(f, g) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(path_metric(f, f) == 0.0);
}

TEST_CASE("path metric is symmetric and satisfies the triangle inequality") {
  auto t = build_triple(0.0, 1.0, 10, 2.5);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    auto f = random_path(t, rng, 6, 1.0);
    auto g = random_path(t, rng, 6, 1.0);
    auto h = random_path(t, rng, 6, 1.0);
    CHECK(path_metric(f, g) == doctest::Approx(path_metric(g, f)).epsilon(1e-14));
    CHECK(path_metric(f, h) <= (path_metric(f, g) + path_metric(g, h)) * (1.0 + 1e-12));
    CHECK(path_metric(f, g) > 0.0);
  }
}

TEST_CASE("path metric rejects mismatched grids") {
  auto t = build_triple(0.0, 1.0, 10, 2.0);
  std::mt19937_64 rng(1);
  auto f = random_path(t, rng, 6, 1.0);
  auto g = random_path(t, rng, 5, 1.0);
  CHECK_THROWS_AS(path_metric(f, g), ShapeError);
  auto h = random_path(build_triple(0.0, 1.0, 11, 2.0), rng, 6, 1.0);
  CHECK_THROWS_AS(path_metric(f, h), ShapeError);
}

TEST_CASE("state vectors reject wrong lengths and non-finite values") {
  auto t = build_triple(0.0, 1.0, 4, 2.0);
  CHECK_THROWS_AS(StateVector(t, {1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(StateVector(t, {1.0, std::nan(""), 0.0}), NumericError);
}
