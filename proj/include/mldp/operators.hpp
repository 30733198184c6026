#pragma once

// Drift A(t, v) and noise B(t, v) operator families on a DiscreteTriple.
// Drift results are nodal (strong-form) values; their action on a test
// vector w is the H-inner product, which reproduces the weak form exactly
// by summation by parts.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mldp/gelfand.hpp"
#include "mldp/tridiagonal.hpp"

namespace mldp {

/// Piecewise-linear samples of a scalar function of time on [0, horizon].
/// A single sample means a constant.
class TimeProfile {
 public:
  TimeProfile() : samples_{1.0} {}
  TimeProfile(double constant) : samples_{constant} {}  // NOLINT: implicit by intent
  TimeProfile(std::vector<double> samples, double horizon);

  double at(double t) const;
  bool is_constant() const { return samples_.size() == 1; }
  const std::vector<double>& samples() const { return samples_; }
  double horizon() const { return horizon_; }

 private:
  std::vector<double> samples_;
  double horizon_ = 1.0;
};

enum class DriftFamily { reaction_diffusion, porous_media, fast_diffusion, p_laplace, high_order, linear };

const char* to_string(DriftFamily f);
DriftFamily drift_family_from_string(const std::string& s);

struct DriftSpec {
  DriftFamily family = DriftFamily::p_laplace;
  double p = 2.0;        // gradient exponent (p_laplace, high_order)
  double p_tilde = 2.0;  // lower-order exponent
  double r = 2.0;        // porous media (> 1) or fast diffusion (0, 1) exponent
  TimeProfile eta{0.0};
  double kappa = 1e-8;   // fast-diffusion regularization
  double lambda = 1.0;   // decay rate of the linear family
  int order = 1;         // derivative order of the high_order family
  double declared_alpha = 2.0;
  double declared_delta = 1.0;
  double declared_K = 0.0;

  /// Strong monotonicity (A2) is claimed by every family except fast diffusion,
  /// which only claims the classical monotone/coercive pair (A2′).
  bool claims_strong_monotonicity() const { return family != DriftFamily::fast_diffusion; }
};

/// Validates family-specific ranges; throws ConfigError.
void validate(const DriftSpec& spec);

/// True when A(t, ·) is a linear map that does not change with t, so one
/// factorization of I − dt·A serves every implicit step.
bool is_linear(const DriftSpec& spec);

/// Declared α that matches the family's natural V space.
double natural_alpha(const DriftSpec& spec);

void drift_apply_into(const DriftSpec& spec, const DiscreteTriple& triple, double t,
                      std::span<const double> v, std::span<double> out);
StateVector drift_apply(const DriftSpec& spec, double t, const StateVector& v);

/// Almost-everywhere derivative of the nodal drift with respect to the state.
Tridiagonal drift_jacobian(const DriftSpec& spec, const DiscreteTriple& triple, double t,
                           std::span<const double> v);

/// Scalar coefficient b(v) of a finite-rank noise term.
struct StateFunctional {
  enum class Kind { constant, affine, saturating };
  Kind kind = Kind::constant;
  double c0 = 1.0;
  double c1 = 0.0;
  std::vector<double> g;  // direction in H (interior nodes), unused for constant

  /// constant: c0; affine: c0 + c1⟨g,v⟩_H; saturating: c0 + c1·tanh(⟨g,v⟩_H)
  double value(const DiscreteTriple& t, std::span<const double> v) const;
  /// Euclidean gradient with respect to nodal values, accumulated as out += scale·∇b.
  void add_gradient(const DiscreteTriple& t, std::span<const double> v, double scale,
                    std::span<double> out) const;
  /// Lipschitz constant with respect to ‖·‖_H.
  double lipschitz(const DiscreteTriple& t) const;
};

struct NoiseTerm {
  StateFunctional coeff;
  std::vector<double> shape;  // interior nodal values of B_i
  TimeProfile profile{1.0};
};

enum class NoiseForm { finite_rank, diagonal_decay };

struct NoiseSpec {
  NoiseForm form = NoiseForm::finite_rank;
  std::vector<NoiseTerm> terms;  // finite_rank: one U-mode per term
  int decay_modes = 0;           // diagonal_decay: number of retained modes
  double decay_rate = 1.0;       // diagonal_decay: column j scaled by j^{-decay_rate}
  double amplitude = 1.0;        // diagonal_decay: overall scale

  std::size_t modes() const {
    return form == NoiseForm::finite_rank ? terms.size() : static_cast<std::size_t>(decay_modes);
  }
  bool state_dependent() const;
};

void validate(const NoiseSpec& spec, const DiscreteTriple& triple);

/// Column j of B(t, v) (image of the j-th unit direction of U), 0-based.
void noise_column_into(const NoiseSpec& spec, const DiscreteTriple& triple, double t,
                       std::span<const double> v, std::size_t j, std::span<double> out);

/// out = B(t, v)·direction
void noise_apply_into(const NoiseSpec& spec, const DiscreteTriple& triple, double t,
                      std::span<const double> v, std::span<const double> direction,
                      std::span<double> out);
StateVector noise_apply(const NoiseSpec& spec, double t, const StateVector& v,
                        std::span<const double> direction);

/// out_j = column_j · mu (Euclidean), i.e. B(t,v)ᵀ mu in nodal coordinates.
void noise_transpose_into(const NoiseSpec& spec, const DiscreteTriple& triple, double t,
                          std::span<const double> v, std::span<const double> mu,
                          std::span<double> out);

/// out += (∂_v [B(t,v)·direction])ᵀ mu
void noise_state_vjp(const NoiseSpec& spec, const DiscreteTriple& triple, double t,
                     std::span<const double> v, std::span<const double> direction,
                     std::span<const double> mu, std::span<double> out);

double hs_norm(const NoiseSpec& spec, double t, const StateVector& v);
double hs_norm(const NoiseSpec& spec, const DiscreteTriple& triple, double t,
               std::span<const double> v);

/// Hilbert–Schmidt mass discarded by truncating a diagonal_decay operator at
/// its retained modes (0 for finite_rank).
double hs_truncation_tail(const NoiseSpec& spec);

}  // namespace mldp
