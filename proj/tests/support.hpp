#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mldp/action.hpp"
#include "mldp/evolution.hpp"
#include "mldp/gelfand.hpp"
#include "mldp/operators.hpp"

namespace testing {

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double upper_normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// dX = -λX dt + σ dW on a one-node triple; (0, 2) with two cells puts the node at 1
struct ScalarOu {
  double lambda = 1.0;
  double sigma = 1.0;
  mldp::TriplePtr triple = mldp::build_triple(0.0, 2.0, 2, 2.0);
  mldp::DriftSpec drift;
  mldp::NoiseSpec noise;

  ScalarOu() {
    drift.family = mldp::DriftFamily::linear;
    drift.lambda = lambda;
    drift.declared_K = 1.0;
    mldp::NoiseTerm term;
    term.shape = {sigma};
    noise.terms.push_back(term);
  }

  mldp::StateVector state(double x) const { return mldp::StateVector(triple, {x}); }

  // X_T ≥ c, with the H weight h = 1 so ⟨g, z⟩_H = z
  mldp::ConstraintSpec event(double c) const {
    mldp::ConstraintSpec e;
    e.kind = mldp::ConstraintKind::terminal_functional;
    e.weights = {1.0};
    e.threshold = c;
    return e;
  }

  double action(double c, double x0, double T) const {
    const double gap = c - x0 * std::exp(-lambda * T);
    return lambda * gap * gap / (sigma * sigma * (1.0 - std::exp(-2.0 * lambda * T)));
  }

  // P(X_T ≥ c) for the continuous process
  double probability(double eps, double c, double x0, double T) const {
    const double mean = x0 * std::exp(-lambda * T);
    const double var = eps * eps * sigma * sigma * (1.0 - std::exp(-2.0 * lambda * T)) / (2.0 * lambda);
    return upper_normal_tail((c - mean) / std::sqrt(var));
  }

  // Same for the implicit Euler chain X_{k+1} = a(X_k + σεΔW_k), a = 1/(1+λdt)
  double discrete_probability(double eps, double c, double x0, double T, int n) const {
    const double dt = T / n;
    const double a = 1.0 / (1.0 + lambda * dt);
    const double mean = x0 * std::pow(a, n);
    double var = 0.0;
    for (int j = 1; j <= n; ++j) var += std::pow(a, 2 * j);
    var *= eps * eps * sigma * sigma * dt;
    return upper_normal_tail((c - mean) / std::sqrt(var));
  }
};

}  // namespace testing
