#pragma once
// Linearization of the nonlinear problem at a noncritical solution w0:
//   -div(A[w0] grad wdot) + m V w0^{m-1} wdot = 0,   wdot = f on the boundary,
// with the induced boundary pairing, the directional derivative of the
// anisotropy tensor, and the 2D metric identities of the anisotropy.

#include "dnl/asymptotics.hpp"
#include "dnl/dtn.hpp"
#include "dnl/elliptic.hpp"

namespace dnl {

struct LinearizedProblem {
  const TriangleMesh* mesh = nullptr;
  NodalField w0;
  TriangleMatrixField A0;   // A[w0], symmetric positive definite per triangle
  Eigen::VectorXd zeroth;   // per-node m V w0^{m-1} (not mass-scaled)
  double p = 3.0;
  double m = 1.0;
};

// Throws NoncriticalityError if w0 has a critical triangle and
// std::invalid_argument when m < 1 and w0 is not strictly positive.
LinearizedProblem linearize_at(const EllipticProblem&, const EllipticSolution& w0);

/// P1 solution of the linearized problem; linear in f.
NodalField solve_linearized(const LinearizedProblem&, const BoundaryTrace& f);

/// Weak pairing  int (grad omega~ . A0 grad wdot + m V w0^{m-1} omega~ wdot)
/// with the zero-interior extension of omega.
double linearized_dtn(const LinearizedProblem&, const BoundaryTrace& f, const BoundaryTrace& omega);

// Directional derivative of the anisotropy tensor along vdot:
//   Adot = (p-2) gamma |a|^{p-4} [ (a.b) I + (p-4)(a.b) a(x)a/|a|^2 + a(x)b + b(x)a ]
// with a = grad v0 and b = grad vdot per triangle.
TriangleMatrixField anisotropy_derivative(const NodalField& gamma, const NodalField& v0,
                                          const NodalField& vdot, double p);

struct Metric2D {
  std::vector<Eigen::Matrix2d> g;  // sqrt(p-1) (I + (2-p)/(p-1) a(x)a/|a|^2), unit determinant
  std::vector<double> detA;        // (p-1) gamma^2 |a|^{2(p-2)}
};
Metric2D metric_2d(const NodalField& gamma, const NodalField& w0, double p);

}  // namespace dnl
