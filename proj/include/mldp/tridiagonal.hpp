#pragma once

#include <span>
#include <vector>

namespace mldp {

/// Square tridiagonal matrix; lower[i] = M(i+1, i), upper[i] = M(i, i+1).
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  explicit Tridiagonal(std::size_t n = 0) : lower(n ? n - 1 : 0), diag(n), upper(n ? n - 1 : 0) {}
  std::size_t size() const { return diag.size(); }

  void multiply(std::span<const double> x, std::span<double> y) const;
  void multiply_transposed(std::span<const double> x, std::span<double> y) const;

  /// Thomas algorithm without pivoting; throws SolverError on a zero pivot.
  void solve(std::span<const double> rhs, std::span<double> x) const;
  void solve_transposed(std::span<const double> rhs, std::span<double> x) const;

  Tridiagonal transposed() const;
};

}  // namespace mldp
