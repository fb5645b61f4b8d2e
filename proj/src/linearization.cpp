#include "dnl/linearization.hpp"

#include <cmath>

#include "assembly.hpp"

namespace dnl {

namespace {

// Full stiffness + lumped zeroth-order diagonal of the linearized operator.
detail::SparseMat assemble_linearized(const P1Geometry& geom, const LinearizedProblem& lin) {
  detail::SparseMat K = detail::assemble_tensor_stiffness(geom, lin.A0.value);
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < geom.mesh->num_nodes(); ++i) {
    const double d = geom.lumped_mass[i] * lin.zeroth[i];
    if (d != 0.0) trip.emplace_back(i, i, d);
  }
  detail::SparseMat D(geom.mesh->num_nodes(), geom.mesh->num_nodes());
  D.setFromTriplets(trip.begin(), trip.end());
  return K + D;
}

}  // namespace

LinearizedProblem linearize_at(const EllipticProblem& pr, const EllipticSolution& sol) {
  validate(pr);
  if (sol.problem_tag != problem_fingerprint(pr))
    throw std::invalid_argument("linearize_at: solution does not belong to this problem");

  LinearizedProblem lin;
  lin.mesh = pr.mesh;
  lin.w0 = sol.w;
  lin.p = pr.p;
  lin.m = pr.m;
  lin.A0 = anisotropy_matrix(pr.gamma, sol.w, pr.p);

  lin.zeroth.resize(pr.mesh->num_nodes());
  for (int i = 0; i < pr.mesh->num_nodes(); ++i) {
    const double V = pr.potential.values[i];
    if (V == 0.0) {
      lin.zeroth[i] = 0.0;
      continue;
    }
    const double w = sol.w.values[i];
    if (pr.m < 1.0 && w <= 0.0)
      throw std::invalid_argument("linearize_at: w0^{m-1} is singular at a nonpositive node for m < 1");
    lin.zeroth[i] = pr.m == 1.0 ? V : pr.m * V * std::pow(std::max(w, 0.0), pr.m - 1.0);
  }
  return lin;
}

NodalField solve_linearized(const LinearizedProblem& lin, const BoundaryTrace& f) {
  if (f.mesh != lin.mesh) throw std::invalid_argument("solve_linearized: trace mesh mismatch");
  const P1Geometry geom = build_geometry(*lin.mesh);
  const detail::SparseMat K = assemble_linearized(geom, lin);
  const detail::DirichletIndex idx(*lin.mesh);
  return {lin.mesh, detail::solve_dirichlet(K, idx, *lin.mesh, f.values,
                                            Eigen::VectorXd::Zero(lin.mesh->num_nodes()))};
}

double linearized_dtn(const LinearizedProblem& lin, const BoundaryTrace& f,
                      const BoundaryTrace& omega) {
  const NodalField wdot = solve_linearized(lin, f);
  const NodalField ext = extend_trace(*lin.mesh, omega, Extension::zero_interior);
  const P1Geometry geom = build_geometry(*lin.mesh);
  const ElementGradientField gw = element_gradients(geom, wdot);
  const ElementGradientField go = element_gradients(geom, ext);
  double value = 0.0;
  for (int t = 0; t < lin.mesh->num_triangles(); ++t)
    value += geom.area[t] * go.value[t].dot(lin.A0.value[t] * gw.value[t]);
  for (int i = 0; i < lin.mesh->num_nodes(); ++i)
    value += geom.lumped_mass[i] * lin.zeroth[i] * ext.values[i] * wdot.values[i];
  return value;
}

TriangleMatrixField anisotropy_derivative(const NodalField& gamma, const NodalField& v0,
                                          const NodalField& vdot, double p) {
  if (!v0.mesh || v0.mesh != gamma.mesh || v0.mesh != vdot.mesh)
    throw std::invalid_argument("anisotropy_derivative: fields on different meshes");
  const TriangleMesh& mesh = *v0.mesh;
  const P1Geometry geom = build_geometry(mesh);
  const Eigen::VectorXd gamma_tri = vertex_average_per_triangle(geom, gamma);
  const ElementGradientField ga = element_gradients(geom, v0);
  const ElementGradientField gb = element_gradients(geom, vdot);

  double gmax = 0.0;
  for (const auto& g : ga.value) gmax = std::max(gmax, g.norm());

  TriangleMatrixField out;
  out.value.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Eigen::Vector2d a = ga.value[t];
    const Eigen::Vector2d b = gb.value[t];
    const double an = a.norm();
    if (!(an > 1e-12 * gmax) || gmax == 0.0)
      throw NoncriticalityError("anisotropy_derivative: base field is critical on triangle " +
                                std::to_string(t));
    const double ab = a.dot(b);
    const Eigen::Matrix2d aa = a * a.transpose() / (an * an);
    out.value[t] = (p - 2.0) * gamma_tri[t] * std::pow(an, p - 4.0) *
                   (ab * Eigen::Matrix2d::Identity() + (p - 4.0) * ab * aa +
                    a * b.transpose() + b * a.transpose());
  }
  return out;
}

Metric2D metric_2d(const NodalField& gamma, const NodalField& w0, double p) {
  if (!w0.mesh || w0.mesh != gamma.mesh)
    throw std::invalid_argument("metric_2d: fields on different meshes");
  const TriangleMesh& mesh = *w0.mesh;
  const P1Geometry geom = build_geometry(mesh);
  const Eigen::VectorXd gamma_tri = vertex_average_per_triangle(geom, gamma);
  const ElementGradientField ga = element_gradients(geom, w0);

  double gmax = 0.0;
  for (const auto& g : ga.value) gmax = std::max(gmax, g.norm());

  Metric2D out;
  out.g.resize(mesh.num_triangles());
  out.detA.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Eigen::Vector2d a = ga.value[t];
    const double an = a.norm();
    if (!(an > 1e-12 * gmax) || gmax == 0.0)
      throw NoncriticalityError("metric_2d: base field is critical on triangle " +
                                std::to_string(t));
    const Eigen::Matrix2d aa = (a / an) * (a / an).transpose();
    out.g[t] = std::sqrt(p - 1.0) *
               (Eigen::Matrix2d::Identity() + (2.0 - p) / (p - 1.0) * aa);
    out.detA[t] = (p - 1.0) * gamma_tri[t] * gamma_tri[t] * std::pow(an, 2.0 * (p - 2.0));
  }
  return out;
}

}  // namespace dnl
