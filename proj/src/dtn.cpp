#include "dnl/dtn.hpp"

#include <cmath>

#include "assembly.hpp"

namespace dnl {

NodalField extend_trace(const TriangleMesh& mesh, const BoundaryTrace& h, Extension extension) {
  if (h.mesh != &mesh || h.values.size() != mesh.num_boundary_nodes())
    throw std::invalid_argument("extend_trace: trace does not match mesh boundary");
  if (extension == Extension::zero_interior) {
    NodalField out{&mesh, Eigen::VectorXd::Zero(mesh.num_nodes())};
    for (int k = 0; k < mesh.num_boundary_nodes(); ++k) out.values[mesh.boundary_nodes[k]] = h.values[k];
    return out;
  }
  const P1Geometry geom = build_geometry(mesh);
  const detail::SparseMat K =
      detail::assemble_isotropic_stiffness(geom, Eigen::VectorXd::Ones(mesh.num_triangles()));
  const detail::DirichletIndex idx(mesh);
  return {&mesh, detail::solve_dirichlet(K, idx, mesh, h.values,
                                         Eigen::VectorXd::Zero(mesh.num_nodes()))};
}

DtNPairing::DtNPairing(const EllipticProblem& pr, const EllipticSolution& sol, Extension extension)
    : problem_(&pr), solution_(&sol), extension_(extension) {
  validate(pr);
  if (sol.problem_tag != problem_fingerprint(pr))
    throw std::invalid_argument("DtNPairing: solution does not belong to this problem (stale pair)");
  if (sol.w.mesh != pr.mesh) throw std::invalid_argument("DtNPairing: solution mesh mismatch");

  flux_ = flux_field(pr, sol);

  const P1Geometry geom = build_geometry(*pr.mesh);
  zeroth_.resize(pr.mesh->num_nodes());
  for (int i = 0; i < pr.mesh->num_nodes(); ++i) {
    const double w = std::max(sol.w.values[i], 0.0);
    zeroth_[i] = pr.potential.values[i] == 0.0
                     ? 0.0
                     : geom.lumped_mass[i] * pr.potential.values[i] * std::pow(w, pr.m);
  }
}

double DtNPairing::evaluate(const BoundaryTrace& h) const {
  const TriangleMesh& mesh = *problem_->mesh;
  const NodalField ext = extend_trace(mesh, h, extension_);
  const P1Geometry geom = build_geometry(mesh);
  const ElementGradientField eg = element_gradients(geom, ext);
  double value = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) value += geom.area[t] * flux_[t].dot(eg.value[t]);
  value += zeroth_.dot(ext.values);
  return value;
}

double dtn_pair(const EllipticProblem& pr, const EllipticSolution& sol, const BoundaryTrace& h,
                Extension extension) {
  return DtNPairing(pr, sol, extension).evaluate(h);
}

std::vector<double> dtn_matrix(const EllipticProblem& pr, const EllipticSolution& sol,
                               const std::vector<BoundaryTrace>& tests, Extension extension) {
  std::vector<double> out;
  out.reserve(tests.size());
  if (tests.empty()) return out;
  const DtNPairing pairing(pr, sol, extension);
  for (const BoundaryTrace& h : tests) out.push_back(pairing.evaluate(h));
  return out;
}

}  // namespace dnl
