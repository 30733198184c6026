#include "mldp/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mldp/errors.hpp"

namespace mldp {

namespace {

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void check_dims(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("inequality check: dimension mismatch");
}

// ‖x‖^q with 0^q = +inf for q < 0 and 0^0 = 1.
double norm_pow(double nx, double q) {
  if (nx == 0.0 && q < 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(nx, q);
}

double slack(double lhs, double rhs) {
  return kInequalitySlack * std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
}

}  // namespace

InequalityCheck strong_monotonicity_check(std::span<const double> a, std::span<const double> b, double r) {
  check_dims(a, b);
  if (!(r >= 0.0)) throw ConfigError("strong monotonicity check requires r >= 0");
  const double na = std::pow(norm(a), r);
  const double nb = std::pow(norm(b), r);
  double lhs = 0.0;
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    lhs += (na * a[i] - nb * b[i]) * d;
    d2 += d * d;
  }
  const double rhs = std::pow(2.0, -r) * std::pow(std::sqrt(d2), r + 2.0);
  return {lhs, rhs, lhs >= rhs - slack(lhs, rhs)};
}

InequalityCheck lipschitz_power_check(std::span<const double> a, std::span<const double> b, double r) {
  check_dims(a, b);
  if (!(r >= 0.0)) throw ConfigError("Lipschitz power check requires r >= 0");
  const double nrm_a = norm(a);
  const double nrm_b = norm(b);
  // the map x ↦ ‖x‖^{r−1}x extends continuously by 0 at the origin for r > 0
  const double sa = nrm_a == 0.0 ? 0.0 : std::pow(nrm_a, r - 1.0);
  const double sb = nrm_b == 0.0 ? 0.0 : std::pow(nrm_b, r - 1.0);
  double diff2 = 0.0;
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double u = sa * a[i] - sb * b[i];
    diff2 += u * u;
    d2 += (a[i] - b[i]) * (a[i] - b[i]);
  }
  const double lhs = std::sqrt(diff2);
  const double dist = std::sqrt(d2);
  double rhs = 0.0;
  if (dist > 0.0) rhs = std::max(r, 1.0) * dist * (norm_pow(nrm_a, r - 1.0) + norm_pow(nrm_b, r - 1.0));
  return {lhs, rhs, lhs <= rhs + slack(lhs, rhs)};
}

InequalityCheck holder_power_check(double a, double b, double r) {
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("Hölder power check requires 0 < r < 1");
  auto psi = [r](double x) { return x == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(x), r), x); };
  const double lhs = std::abs(psi(a) - psi(b));
  const double rhs = kHolderConstant * std::pow(std::abs(a - b), r);
  return {lhs, rhs, lhs <= rhs + slack(lhs, rhs)};
}

}  // namespace mldp
