#pragma once

// Finite-dimensional stand-in for the Gelfand triple V ⊂ H ⊂ V* on a 1-D
// interval with homogeneous Dirichlet data. States live on the interior
// nodes; H is the trapezoid-weighted L² space, V is W^{1,α}_0 realized with
// forward differences.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace mldp {

struct DiscreteTriple {
  double domain_left = 0.0;
  double domain_right = 1.0;
  int n_cells = 2;
  double alpha = 2.0;
  bool dirichlet = true;
  std::vector<double> node_positions;  // n_cells + 1 nodes, boundary included
  std::vector<double> quad_weights;    // composite trapezoid over all nodes

  double h() const { return (domain_right - domain_left) / n_cells; }
  double length() const { return domain_right - domain_left; }
  std::size_t dim() const { return static_cast<std::size_t>(n_cells - 1); }

  /// Weights restricted to interior nodes (all equal to h).
  std::span<const double> interior_weights() const {
    return std::span<const double>(quad_weights).subspan(1, dim());
  }

  /// k-th discrete sine mode (1-based), normalized to unit H-norm.
  std::span<const double> sine_mode(std::size_t k) const;

  /// Eigenvalue of the 3-point Dirichlet Laplacian on sine mode k (negative).
  double laplacian_eigenvalue(std::size_t k) const;

  bool same_grid(const DiscreteTriple& other) const;

  std::vector<double> mode_table;  // row-major dim × dim, row k-1 holds mode k
};

using TriplePtr = std::shared_ptr<const DiscreteTriple>;

TriplePtr build_triple(double domain_left, double domain_right, int n_cells, double alpha);

/// Same grid with a different V-integrability exponent.
TriplePtr with_alpha(const TriplePtr& triple, double alpha);

struct StateVector {
  TriplePtr triple;
  std::vector<double> values;

  StateVector() = default;
  StateVector(TriplePtr t, std::vector<double> v);

  static StateVector zeros(TriplePtr t);
  /// Samples f at the interior node positions.
  template <class F>
  static StateVector sample(TriplePtr t, F&& f) {
    std::vector<double> v(t->dim());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(t->node_positions[i + 1]);
    return StateVector(std::move(t), std::move(v));
  }

  std::size_t size() const { return values.size(); }
};

// Raw kernels shared by the other modules; inputs are interior-node values.
double h_inner(const DiscreteTriple& t, std::span<const double> u, std::span<const double> v);
double h_norm(const DiscreteTriple& t, std::span<const double> u);
double v_norm(const DiscreteTriple& t, std::span<const double> u);
double v_norm_pow(const DiscreteTriple& t, std::span<const double> u, double alpha);
void project_into(const DiscreteTriple& t, std::span<const double> u, std::size_t n,
                  std::span<double> out);

double h_inner(const StateVector& u, const StateVector& v);
double h_norm(const StateVector& u);
double v_norm(const StateVector& u);
StateVector project(const StateVector& u, std::size_t n);

enum class PathKind { sde_sample, skeleton, galerkin };

const char* to_string(PathKind kind);

/// Time-indexed trajectory on a uniform grid; states are row-major
/// (time × interior nodes).
struct PathRecord {
  TriplePtr triple;
  std::vector<double> time_grid;
  std::vector<double> states;
  PathKind kind = PathKind::skeleton;

  std::size_t n_times() const { return time_grid.size(); }
  std::size_t dim() const { return triple ? triple->dim() : 0; }
  std::span<const double> row(std::size_t k) const {
    return std::span<const double>(states).subspan(k * dim(), dim());
  }
  std::span<double> row(std::size_t k) {
    return std::span<double>(states).subspan(k * dim(), dim());
  }
  std::span<const double> terminal() const { return row(n_times() - 1); }
  double horizon() const { return time_grid.back(); }
};

std::vector<double> uniform_time_grid(double T, int n_steps);

/// sup_t ‖f−g‖_H + (∫‖f−g‖_V^α dt)^{1/α}, trapezoid rule in time.
double path_metric(const PathRecord& f, const PathRecord& g);

}  // namespace mldp
