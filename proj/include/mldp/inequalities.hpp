#pragma once

// Power-nonlinearity inequalities used to certify monotonicity of the
// p-Laplace, porous-media and fast-diffusion operators:
//   (a) ⟨‖a‖^r a − ‖b‖^r b, a − b⟩ ≥ 2^{−r} ‖a − b‖^{r+2}            (r ≥ 0)
//   (b) ‖‖a‖^{r−1}a − ‖b‖^{r−1}b‖ ≤ max{r,1} ‖a − b‖ (‖a‖^{r−1} + ‖b‖^{r−1})
//   (c) ||a|^{r−1}a − |b|^{r−1}b| ≤ C |a − b|^r   (scalars, 0 < r < 1, C = 2)

#include <span>

namespace mldp {

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

inline constexpr double kInequalitySlack = 1e-12;
inline constexpr double kHolderConstant = 2.0;

/// (a): holds when lhs ≥ rhs up to kInequalitySlack relative.
InequalityCheck strong_monotonicity_check(std::span<const double> a, std::span<const double> b, double r);

/// (b): holds when lhs ≤ rhs up to kInequalitySlack relative.
InequalityCheck lipschitz_power_check(std::span<const double> a, std::span<const double> b, double r);

/// (c): throws ConfigError unless 0 < r < 1.
InequalityCheck holder_power_check(double a, double b, double r);

}  // namespace mldp
