#include "doctest.h"

#include <cmath>
#include <random>

#include "mldp/conditions.hpp"
#include "mldp/errors.hpp"
#include "mldp/inequalities.hpp"
#include "mldp/operators.hpp"
#include "mldp/parallel.hpp"
#include "support.hpp"

using namespace mldp;

namespace {

DriftSpec p_laplace(double p, double eta = 0.0) {
  DriftSpec d;
  d.family = DriftFamily::p_laplace;
  d.p = p;
  d.p_tilde = std::min(p, 2.0);
  d.eta = TimeProfile(eta);
  d.declared_alpha = p;
  d.declared_delta = std::pow(2.0, -(p - 2.0));
  return d;
}

// -(1/h²) second difference of f(v) with zero ghosts
std::vector<double> stencil(const std::vector<double>& w, double h) {
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double l = i > 0 ? w[i - 1] : 0.0;
    const double r = i + 1 < w.size() ? w[i + 1] : 0.0;
    out[i] = (l - 2.0 * w[i] + r) / (h * h);
  }
  return out;
}

NoiseSpec single_mode(const TriplePtr& t, std::vector<double> shape, StateFunctional b = {}) {
  NoiseSpec n;
  NoiseTerm term;
  term.coeff = std::move(b);
  term.shape = std::move(shape);
  n.terms.push_back(std::move(term));
  (void)t;
  return n;
}

}  // namespace

TEST_CASE("p = 2 drift is the three-point Laplacian") {
  auto t = build_triple(0.0, 1.0, 2, 2.0);
  auto out = drift_apply(p_laplace(2.0), 0.0, StateVector(t, {1.0}));
  CHECK(out.values[0] == doctest::Approx(-8.0).epsilon(1e-14));
  CHECK(drift_apply(p_laplace(2.0), 0.0, StateVector::zeros(t)).values[0] == 0.0);

  auto t2 = build_triple(0.0, 3.0, 21, 2.0);
  std::mt19937_64 rng(2);
  StateVector u(t2, testing::random_vector(rng, t2->dim()));
  auto expected = stencil(u.values, t2->h());
  auto got = drift_apply(p_laplace(2.0), 0.3, u);
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(got.values[i] == doctest::Approx(expected[i]).epsilon(1e-13));
}

TEST_CASE("porous media with r = 3 on a ±c state") {
  auto t = build_triple(0.0, 1.0, 9, 3.0);
  DriftSpec d;
  d.family = DriftFamily::porous_media;
  d.r = 3.0;
  const double c = 0.7;
  std::vector<double> v(t->dim()), psi(t->dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = (i % 3 == 0) ? -c : c;
    psi[i] = std::copysign(c * c * c, v[i]);
  }
  auto expected = stencil(psi, t->h());
  auto got = drift_apply(d, 0.0, StateVector(t, v));
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(got.values[i] == doctest::Approx(expected[i]).epsilon(1e-13));
}

TEST_CASE("reaction-diffusion adds -eta |v|^(p~-2) v") {
  auto t = build_triple(0.0, 1.0, 6, 2.0);
  DriftSpec d;
  d.family = DriftFamily::reaction_diffusion;
  d.p_tilde = 1.5;
  d.eta = TimeProfile(2.0);
  std::vector<double> v{0.3, -1.2, 0.8, 0.1, -0.4};
  auto expected = stencil(v, t->h());
  for (std::size_t i = 0; i < v.size(); ++i) expected[i] -= 2.0 * std::copysign(std::pow(std::abs(v[i]), 0.5), v[i]);
  auto got = drift_apply(d, 0.0, StateVector(t, v));
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(got.values[i] == doctest::Approx(expected[i]).epsilon(1e-13));
}

TEST_CASE("drift family ranges are enforced") {
  DriftSpec d;
  d.family = DriftFamily::porous_media;
  d.r = 0.8;
  CHECK_THROWS_AS(validate(d), ConfigError);
  d.family = DriftFamily::fast_diffusion;
  d.r = 1.5;
  CHECK_THROWS_AS(validate(d), ConfigError);
  d.r = 0.5;
  CHECK_NOTHROW(validate(d));
  d.family = DriftFamily::p_laplace;
  d.p = 3.0;
  d.p_tilde = 3.5;
  CHECK_THROWS_AS(validate(d), ConfigError);
  d.p_tilde = 2.0;
  d.declared_alpha = 1.0;
  CHECK_THROWS_AS(validate(d), ConfigError);
  d.declared_alpha = 3.0;
  d.family = DriftFamily::high_order;
  d.order = 2;
  CHECK_THROWS_AS(validate(d), ConfigError);
  CHECK_THROWS_AS(drift_family_from_string("heat"), ConfigError);
}

TEST_CASE("analytic Jacobian matches central differences") {
  auto t = build_triple(0.0, 1.0, 12, 3.0);
  std::mt19937_64 rng(17);
  std::vector<DriftSpec> specs;
  specs.push_back(p_laplace(3.0, 1.0));
  specs.push_back(p_laplace(2.0, 0.5));
  DriftSpec pm;
  pm.family = DriftFamily::porous_media;
  pm.r = 2.5;
  pm.eta = TimeProfile(0.3);
  specs.push_back(pm);
  DriftSpec fd;
  fd.family = DriftFamily::fast_diffusion;
  fd.r = 0.5;
  fd.kappa = 0.1;
  specs.push_back(fd);
  DriftSpec rd;
  rd.family = DriftFamily::reaction_diffusion;
  rd.p_tilde = 1.5;
  rd.eta = TimeProfile(1.0);
  specs.push_back(rd);
  for (const auto& spec : specs) {
    auto v = testing::random_vector(rng, t->dim());
    auto J = drift_jacobian(spec, *t, 0.0, v);
    const double step = 1e-6;
    for (std::size_t j = 0; j < v.size(); ++j) {
      auto vp = v, vm = v;
      vp[j] += step;
      vm[j] -= step;
      std::vector<double> fp(v.size()), fm(v.size());
      drift_apply_into(spec, *t, 0.0, vp, fp);
      drift_apply_into(spec, *t, 0.0, vm, fm);
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double fd_ij = (fp[i] - fm[i]) / (2.0 * step);
        double an = 0.0;
        if (i == j) an = J.diag[i];
        else if (j == i + 1) an = J.upper[i];
        else if (i == j + 1) an = J.lower[j];
        CHECK(an == doctest::Approx(fd_ij).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("is_linear flags the drifts with a constant tridiagonal Jacobian") {
  CHECK(is_linear(p_laplace(2.0)));
  CHECK_FALSE(is_linear(p_laplace(3.0)));
  CHECK(is_linear(p_laplace(2.0, 1.0)));
  DriftSpec rd;
  rd.family = DriftFamily::reaction_diffusion;
  rd.p_tilde = 1.5;
  rd.eta = TimeProfile(1.0);
  CHECK_FALSE(is_linear(rd));
  rd.eta = TimeProfile({0.0, 1.0}, 1.0);
  rd.p_tilde = 2.0;
  CHECK_FALSE(is_linear(rd));
  DriftSpec lin;
  lin.family = DriftFamily::linear;
  CHECK(is_linear(lin));
  DriftSpec pm;
  pm.family = DriftFamily::porous_media;
  CHECK_FALSE(is_linear(pm));
}

TEST_CASE("noise_apply is linear in the direction") {
  auto t = build_triple(0.0, 1.0, 10, 2.0);
  std::vector<double> s(t->dim(), 0.5);
  auto one = single_mode(t, s);
  std::vector<double> two{2.0};
  auto r = noise_apply(one, 0.0, StateVector::zeros(t), two);
  for (double x : r.values) CHECK(x == doctest::Approx(1.0));
  std::vector<double> zero{0.0};
  for (double x : noise_apply(one, 0.0, StateVector::zeros(t), zero).values) CHECK(x == 0.0);
  std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(noise_apply(one, 0.0, StateVector::zeros(t), wrong), ShapeError);

  std::mt19937_64 rng(6);
  NoiseSpec multi;
  for (int j = 0; j < 3; ++j) {
    NoiseTerm term;
    term.shape = testing::random_vector(rng, t->dim());
    term.coeff.kind = StateFunctional::Kind::saturating;
    term.coeff.c0 = 1.0;
    term.coeff.c1 = 0.5;
    term.coeff.g = testing::random_vector(rng, t->dim());
    multi.terms.push_back(term);
  }
  for (int k = 0; k < 50; ++k) {
    StateVector v(t, testing::random_vector(rng, t->dim()));
    auto d1 = testing::random_vector(rng, 3), d2 = testing::random_vector(rng, 3);
    std::vector<double> d12(3);
    for (int j = 0; j < 3; ++j) d12[j] = d1[j] + d2[j];
    auto a = noise_apply(multi, 0.2, v, d1), b = noise_apply(multi, 0.2, v, d2), c = noise_apply(multi, 0.2, v, d12);
    for (std::size_t i = 0; i < t->dim(); ++i) CHECK(std::abs(c.values[i] - a.values[i] - b.values[i]) <= 1e-12);

    double hs2 = 0.0;
    for (int j = 0; j < 3; ++j) {
      std::vector<double> e(3, 0.0);
      e[j] = 1.0;
      hs2 += std::pow(h_norm(noise_apply(multi, 0.2, v, e)), 2);
    }
    CHECK(std::abs(hs2 - std::pow(hs_norm(multi, 0.2, v), 2)) <= 1e-12 * std::max(1.0, hs2));
  }
}

TEST_CASE("Hilbert-Schmidt norm examples") {
  auto t = build_triple(0.0, 1.0, 16, 2.0);
  NoiseSpec none;
  CHECK(hs_norm(none, 0.0, StateVector::zeros(t)) == 0.0);

  auto m1 = t->sine_mode(1);
  std::vector<double> shape(m1.begin(), m1.end());
  for (auto& x : shape) x *= 3.0;
  CHECK(hs_norm(single_mode(t, shape), 0.0, StateVector::zeros(t)) == doctest::Approx(3.0).epsilon(1e-12));

  NoiseSpec diag;
  diag.form = NoiseForm::diagonal_decay;
  diag.decay_modes = 3;
  diag.decay_rate = 1.0;
  CHECK(hs_norm(diag, 0.0, StateVector::zeros(t)) == doctest::Approx(std::sqrt(1.0 + 0.25 + 1.0 / 9.0)).epsilon(1e-12));
  diag.decay_rate = 0.5;
  CHECK_THROWS_AS(validate(diag, *t), ConfigError);
}

TEST_CASE("state functional gradients match finite differences") {
  auto t = build_triple(0.0, 1.0, 8, 2.0);
  std::mt19937_64 rng(31);
  for (auto kind : {StateFunctional::Kind::affine, StateFunctional::Kind::saturating}) {
    StateFunctional b;
    b.kind = kind;
    b.c0 = 0.4;
    b.c1 = 1.3;
    b.g = testing::random_vector(rng, t->dim());
    auto v = testing::random_vector(rng, t->dim());
    std::vector<double> grad(t->dim(), 0.0);
    b.add_gradient(*t, v, 1.0, grad);
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto vp = v, vm = v;
      vp[i] += 1e-6;
      vm[i] -= 1e-6;
      const double fd = (b.value(*t, vp) - b.value(*t, vm)) / 2e-6;
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("power inequality (a) examples") {
  std::vector<double> a{1.0, 0.0}, b{0.0, 0.0};
  auto c = strong_monotonicity_check(a, b, 2.0);
  CHECK(c.lhs == doctest::Approx(1.0));
  CHECK(c.rhs == doctest::Approx(0.25));
  CHECK(c.holds);
  auto same = strong_monotonicity_check(a, a, 1.5);
  CHECK(same.lhs == 0.0);
  CHECK(same.rhs == 0.0);
  CHECK(same.holds);
  std::vector<double> x{0.3, -2.0, 1.1}, y{-0.7, 0.4, 2.0};
  auto r0 = strong_monotonicity_check(x, y, 0.0);
  CHECK(r0.lhs == doctest::Approx(r0.rhs).epsilon(1e-14));
}

TEST_CASE("power inequality (b) and (c) examples") {
  std::vector<double> a{0.5, 1.0}, b{0.5, 1.0};
  auto same = lipschitz_power_check(a, b, 2.0);
  CHECK(same.lhs == 0.0);
  CHECK(same.holds);
  std::vector<double> x{0.3, -2.0}, y{1.0, 0.5};
  auto r1 = lipschitz_power_check(x, y, 1.0);
  CHECK(r1.holds);
  CHECK(r1.rhs == doctest::Approx(2.0 * r1.lhs));
  auto h = holder_power_check(1.0, 0.0, 0.5);
  CHECK(h.lhs == doctest::Approx(1.0));
  CHECK(h.holds);
  CHECK_THROWS_AS(holder_power_check(1.0, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(holder_power_check(1.0, 0.0, 0.0), ConfigError);
}

TEST_CASE("constant 2 suffices for the scalar Holder bound") {
  // brute-force scan of |a|^{r-1}a - |b|^{r-1}b over |a - b|^r
  double worst = 0.0;
  for (double r = 0.05; r < 1.0; r += 0.05) {
    for (int i = -200; i <= 200; ++i) {
      for (int j = -200; j <= 200; ++j) {
        if (i == j) continue;
        const double a = i / 20.0, b = j / 20.0;
        const double lhs = std::abs(std::copysign(std::pow(std::abs(a), r), a) - std::copysign(std::pow(std::abs(b), r), b));
        worst = std::max(worst, lhs / std::pow(std::abs(a - b), r));
      }
    }
  }
  CHECK(worst <= kHolderConstant);
  CHECK(worst > 1.0);
}

TEST_CASE("power inequalities hold on random inputs") {
  std::mt19937_64 rng(61);
  std::uniform_int_distribution<int> dim(1, 16);
  std::uniform_real_distribution<double> rr(0.0, 4.0), scale(-3.0, 3.0), unit(0.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const std::size_t n = dim(rng);
    const double s = std::pow(10.0, scale(rng));
    auto a = testing::random_vector(rng, n, s), b = testing::random_vector(rng, n, s);
    const double r = rr(rng);
    CHECK(strong_monotonicity_check(a, b, r).holds);
    CHECK(lipschitz_power_check(a, b, r).holds);
    const double rh = 0.01 + 0.98 * unit(rng);
    CHECK(holder_power_check(a[0], b[0], rh).holds);
  }
}

TEST_CASE("discrete p-Laplace strong monotonicity") {
  std::mt19937_64 rng(12);
  for (double p : {2.0, 3.0, 4.0}) {
    auto t = build_triple(0.0, 1.0, 24, p);
    const auto d = p_laplace(p);
    for (int k = 0; k < 200; ++k) {
      auto u = testing::random_vector(rng, t->dim(), 0.3), v = testing::random_vector(rng, t->dim(), 0.3);
      std::vector<double> au(u.size()), av(u.size()), e(u.size()), diff(u.size());
      drift_apply_into(d, *t, 0.0, u, au);
      drift_apply_into(d, *t, 0.0, v, av);
      for (std::size_t i = 0; i < u.size(); ++i) {
        e[i] = au[i] - av[i];
        diff[i] = u[i] - v[i];
      }
      const double lhs = h_inner(*t, e, diff);
      const double rhs = -std::pow(2.0, -(p - 2.0)) * v_norm_pow(*t, diff, p);
      CHECK(lhs <= rhs * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("Laplacian with zero noise certifies A2 with delta 2") {
  auto t = build_triple(0.0, 1.0, 16, 2.0);
  auto d = p_laplace(2.0);
  d.declared_delta = 2.0;
  auto report = verify_conditions(d, NoiseSpec{}, *t, 200, 5);
  CHECK(report.entry("A2").pass);
  CHECK(report.entry("A2").constants.at("delta_hat") == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(report.entry("A1").pass);
  CHECK(report.entry("A4").pass);
}

TEST_CASE("fast diffusion claims only the weak monotonicity pair") {
  auto t = build_triple(0.0, 1.0, 16, 1.5);
  DriftSpec d;
  d.family = DriftFamily::fast_diffusion;
  d.r = 0.5;
  d.declared_alpha = 1.5;
  d.declared_delta = 0.01;
  d.declared_K = 10.0;
  auto report = verify_conditions(d, NoiseSpec{}, *t, 300, 9);
  CHECK(report.geometry == "H-1/La");
  CHECK_FALSE(report.entry("A2").claimed);
  CHECK(report.entry("A2'").claimed);
  CHECK(report.entry("A2'").pass);
}

TEST_CASE("A4 decay table for a smooth mode") {
  auto t = build_triple(0.0, 1.0, 20, 2.0);
  auto shape = StateVector::sample(t, [](double x) { return x * (1.0 - x) * std::exp(x); }).values;
  auto report = verify_conditions(p_laplace(2.0), single_mode(t, shape), *t, 50, 3);
  const auto& decay = report.a4_decay;
  REQUIRE(decay.size() == t->dim());
  for (std::size_t k = 1; k + 1 < decay.size(); ++k) CHECK(decay[k] < decay[k - 1]);
  CHECK(decay.back() < 1e-8);
  CHECK(report.entry("A4").pass);
}

TEST_CASE("condition reports are deterministic and independent of the pool") {
  auto t = build_triple(0.0, 1.0, 16, 3.0);
  auto d = p_laplace(3.0, 1.0);
  d.declared_K = 4.0;
  NoiseSpec noise;
  NoiseTerm term;
  term.shape = std::vector<double>(t->dim(), 0.2);
  term.coeff.kind = StateFunctional::Kind::saturating;
  term.coeff.c0 = 0.5;
  term.coeff.c1 = 0.3;
  term.coeff.g = t->mode_table;
  term.coeff.g.resize(t->dim());
  noise.terms.push_back(term);
  WorkerPool one(1), four(4);
  auto a = to_json(verify_conditions(d, noise, *t, 100, 42, {}, &one)).dump();
  auto b = to_json(verify_conditions(d, noise, *t, 100, 42, {}, &four)).dump();
  auto c = to_json(verify_conditions(d, noise, *t, 100, 42)).dump();
  CHECK(a == b);
  CHECK(a == c);
  auto other = to_json(verify_conditions(d, noise, *t, 100, 43)).dump();
  CHECK(a != other);
}
