#pragma once
// Weak-form Dirichlet-to-Neumann pairings.  The boundary flux functional is
// evaluated volumetrically,
//   <Lambda(g), h> = int gamma |grad w|^{p-2} grad w . grad h~  +  int V w^m h~,
// against an arbitrary extension h~ of the test trace; at the discrete
// minimizer the value is extension-independent up to the solver tolerance.

#include <vector>

#include "dnl/elliptic.hpp"

namespace dnl {

enum class Extension { zero_interior, harmonic };

/// Nodal extension of a boundary trace: zero at interior nodes, or the
/// discrete-harmonic extension.
NodalField extend_trace(const TriangleMesh&, const BoundaryTrace&, Extension);

class DtNPairing {
 public:
  /// Throws std::invalid_argument when the solution does not belong to the
  /// problem (stale pair).
  DtNPairing(const EllipticProblem&, const EllipticSolution&,
             Extension extension = Extension::zero_interior);

  double evaluate(const BoundaryTrace& h) const;

 private:
  const EllipticProblem* problem_;
  const EllipticSolution* solution_;
  Extension extension_;
  std::vector<Eigen::Vector2d> flux_;   // per-triangle regularized flux of w
  Eigen::VectorXd zeroth_;              // lumped V (w_+)^m per node
};

double dtn_pair(const EllipticProblem&, const EllipticSolution&, const BoundaryTrace& h,
                Extension extension = Extension::zero_interior);

std::vector<double> dtn_matrix(const EllipticProblem&, const EllipticSolution&,
                               const std::vector<BoundaryTrace>& tests,
                               Extension extension = Extension::zero_interior);

}  // namespace dnl
