#pragma once
// Degenerate parabolic side: separated solutions u = t^alpha w reduce the
// evolution
//   eps d/dt(u^m) - div(gamma |grad u|^{p-2} grad u) = 0,  u(0) = 0,
// to the nonlinear elliptic problem with V = m/(m-p+1) eps.  An implicit
// Euler scheme in the u^m variable provides the general-purpose stepper; each
// step is a convex minimization sharing the elliptic solver machinery.

#include <functional>
#include <vector>

#include "dnl/dtn.hpp"
#include "dnl/elliptic.hpp"

namespace dnl {

/// alpha = 1/(m - p + 1); throws std::domain_error unless m > p-1.
double alpha_exponent(double m, double p);

/// Nodal potential V = m * alpha * eps of the separated reduction.
NodalField potential_from_epsilon(const NodalField& eps, double m, double p);

struct ParabolicProblem {
  const TriangleMesh* mesh = nullptr;
  NodalField epsilon;
  NodalField gamma;
  double p = 3.0;
  double m = 4.0;
  double T = 1.0;
  // Lateral Dirichlet data sampled at a requested time; must be nonnegative.
  std::function<BoundaryTrace(double)> lateral;
};

/// Lateral data of the separated class, t -> t^alpha g.
std::function<BoundaryTrace(double)> separated_lateral(const BoundaryTrace& g, double alpha);

struct SeparatedSolution {
  NodalField w;             // spatial factor
  double alpha = 0.0;       // time exponent of the data and the solution
  double flux_exponent = 0.0;  // alpha (p-1), the time exponent of the flux
  EllipticSolution elliptic;   // diagnostics and regularization floor

  NodalField at_time(double t) const;  // t^alpha w
  /// Per-triangle flux of u(t), the closed form t^{alpha (p-1)} flux(w).
  std::vector<Eigen::Vector2d> flux_at_time(const EllipticProblem&, double t) const;
};

// Solves the elliptic reduction for strictly positive g and packages the
// closed-form space-time solution.
SeparatedSolution separated_solution(const ParabolicProblem&, const BoundaryTrace& g,
                                     const SolverSettings& = {});

/// Builds the elliptic problem of the separated reduction (shared plumbing).
EllipticProblem elliptic_reduction(const ParabolicProblem&, const BoundaryTrace& g);

struct TimeGrid {
  int steps = 16;
  double T = 1.0;
  double dt() const { return T / steps; }
  double time(int k) const { return k * dt(); }
};

// Implicit Euler in the u^m variable; returns steps+1 snapshots including the
// zero initial state.  Each step minimizes
//   int gamma |grad v|^p / p + (1/dt) int eps (v_+^{m+1}/(m+1) - u_prev^m v)
// with the step's Dirichlet data.  Throws SolveError naming the failing step.
std::vector<NodalField> step_implicit(const ParabolicProblem&, const TimeGrid&,
                                      const SolverSettings& = {});

// Lumped values of  int eps (u1^m - u2^m)_+  at each shared snapshot time.
// Throws std::invalid_argument on mismatched runs.
std::vector<double> comparison_defect(const std::vector<NodalField>& run1,
                                      const std::vector<NodalField>& run2,
                                      const NodalField& epsilon, double m);

struct LateralRecord {
  std::vector<double> times;
  Eigen::MatrixXd pairings;    // times x tests
  double flux_exponent = 0.0;  // alpha (p-1)
  SeparatedSolution separated;
};

// Weak flux pairings of the separated solution at the requested times,
// assembled from the snapshot fields; the time factor t^{alpha(p-1)} emerges
// from homogeneity rather than being inserted.
LateralRecord lateral_cauchy_record(const ParabolicProblem&, const BoundaryTrace& g,
                                    const std::vector<BoundaryTrace>& tests,
                                    const std::vector<double>& times, const SolverSettings& = {});

}  // namespace dnl
