#pragma once
// Nonlinear elliptic solver.  The boundary value problem
//   -div(gamma |grad w|^{p-2} grad w) + V w^m = 0,   w = g on the boundary,
// is solved by minimizing the strictly convex energy
//   E[v] = int (gamma/p) |grad v|^p + int (V/(m+1)) (v_+)^{m+1}
// over P1 fields with pinned boundary values, using damped Newton with
// continuation in a gradient regularization delta.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dnl/fields.hpp"

namespace dnl {

struct EllipticProblem {
  const TriangleMesh* mesh = nullptr;
  NodalField gamma;      // strictly positive weight
  NodalField potential;  // V >= 0; identically zero disables absorption
  double p = 3.0;        // in (1, inf); p = 2 accepted for sanity checks only
  double m = 1.0;        // > 0
  BoundaryTrace dirichlet;
};

/// Throws std::invalid_argument if the problem violates its admissibility
/// invariants (positivity of gamma, sign of V, nonnegative data when V > 0).
void validate(const EllipticProblem&);

/// Content fingerprint used to detect stale problem/solution pairs.
std::uint64_t problem_fingerprint(const EllipticProblem&);

struct ArmijoParams {
  double slope_fraction = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
};

struct SolverSettings {
  double grad_tol = 1e-11;  // relative gradient-norm stopping tolerance
  int max_newton = 500;     // iteration cap across the whole delta continuation
  // Regularization continuation: delta_k = max(rel_k * G, abs_floor) with G
  // the largest element-gradient magnitude of the initial guess.  An explicit
  // absolute sequence overrides both.
  std::vector<double> delta_rel_seq = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  double delta_abs_floor = 1e-12;
  std::optional<std::vector<double>> delta_abs_seq;
  ArmijoParams armijo;
};

struct EllipticSolution {
  NodalField w;
  double final_energy = 0.0;
  int iterations = 0;
  double achieved_grad_norm = 0.0;  // relative to the initial residual norm
  double delta_floor = 0.0;         // regularization the minimizer refers to
  std::uint64_t problem_tag = 0;
};

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Regularized energy; delta = 0 evaluates the exact functional.
/// Requires v to match the Dirichlet data on boundary nodes.
double energy(const EllipticProblem&, const NodalField& v, double delta);

/// Discrete residual: entries at interior nodes are directional derivatives
/// of the energy along nodal hat functions; boundary entries are zero.
NodalField energy_gradient(const EllipticProblem&, const NodalField& v, double delta);

EllipticSolution solve(const EllipticProblem&, const SolverSettings& = {});

/// Same as solve but starting from a caller-provided admissible field
/// (boundary values are overwritten with the Dirichlet data).
EllipticSolution solve_from(const EllipticProblem&, const SolverSettings&, const NodalField& start);

/// Discrete-harmonic (p = 2, V = 0) extension of g; the default initial guess.
NodalField harmonic_extension(const TriangleMesh&, const NodalField& gamma, const BoundaryTrace& g);

/// Per-triangle regularized flux  gamma_T (|grad w|^2 + delta^2)^{(p-2)/2} grad w.
std::vector<Eigen::Vector2d> flux_field(const EllipticProblem&, const NodalField& w, double delta);
std::vector<Eigen::Vector2d> flux_field(const EllipticProblem&, const EllipticSolution&);

}  // namespace dnl
