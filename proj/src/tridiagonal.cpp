#include "mldp/tridiagonal.hpp"

#include <cmath>

#include "mldp/errors.hpp"

namespace mldp {

void Tridiagonal::multiply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += lower[i - 1] * x[i - 1];
    if (i + 1 < n) s += upper[i] * x[i + 1];
    y[i] = s;
  }
}

void Tridiagonal::multiply_transposed(std::span<const double> x, std::span<double> y) const {
  transposed().multiply(x, y);
}

Tridiagonal Tridiagonal::transposed() const {
  Tridiagonal t(size());
  t.diag = diag;
  t.lower = upper;
  t.upper = lower;
  return t;
}

void Tridiagonal::solve(std::span<const double> rhs, std::span<double> x) const {
  const std::size_t n = size();
  if (n == 0) return;
  std::vector<double> c(n);
  std::vector<double> d(n);
  double pivot = diag[0];
  if (pivot == 0.0 || !std::isfinite(pivot)) throw SolverError("tridiagonal solve: zero pivot", 0.0);
  c[0] = n > 1 ? upper[0] / pivot : 0.0;
  d[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - lower[i - 1] * c[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      throw SolverError("tridiagonal solve: zero pivot", 0.0);
    }
    c[i] = i + 1 < n ? upper[i] / pivot : 0.0;
    d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
}

void Tridiagonal::solve_transposed(std::span<const double> rhs, std::span<double> x) const {
  transposed().solve(rhs, x);
}

}  // namespace mldp
