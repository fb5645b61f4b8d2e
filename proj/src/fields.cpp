#include "dnl/fields.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dnl {

NodalField make_field(const TriangleMesh& mesh, double constant) {
  return {&mesh, Eigen::VectorXd::Constant(mesh.num_nodes(), constant)};
}

NodalField make_field(const TriangleMesh& mesh, const ScalarFn& f) {
  NodalField u{&mesh, Eigen::VectorXd(mesh.num_nodes())};
  for (int i = 0; i < mesh.num_nodes(); ++i) u.values[i] = f(mesh.nodes[i].x(), mesh.nodes[i].y());
  return u;
}

BoundaryTrace make_trace(const TriangleMesh& mesh, double constant) {
  return {&mesh, Eigen::VectorXd::Constant(mesh.num_boundary_nodes(), constant)};
}

BoundaryTrace make_trace(const TriangleMesh& mesh, const ScalarFn& f) {
  BoundaryTrace g{&mesh, Eigen::VectorXd(mesh.num_boundary_nodes())};
  for (int k = 0; k < mesh.num_boundary_nodes(); ++k) {
    const Eigen::Vector2d& x = mesh.nodes[mesh.boundary_nodes[k]];
    g.values[k] = f(x.x(), x.y());
  }
  return g;
}

BoundaryTrace trace_of(const NodalField& u) {
  if (!u.mesh) throw std::invalid_argument("trace_of: field has no mesh");
  const TriangleMesh& mesh = *u.mesh;
  BoundaryTrace g{&mesh, Eigen::VectorXd(mesh.num_boundary_nodes())};
  for (int k = 0; k < mesh.num_boundary_nodes(); ++k) g.values[k] = u.values[mesh.boundary_nodes[k]];
  return g;
}

ElementGradientField element_gradients(const P1Geometry& geom, const NodalField& u) {
  const TriangleMesh& mesh = *geom.mesh;
  if (u.mesh != &mesh || u.values.size() != mesh.num_nodes())
    throw std::invalid_argument("element_gradients: field does not match mesh");
  ElementGradientField out;
  out.value.resize(mesh.num_triangles());
  out.area = geom.area;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector3d local(u.values[tri[0]], u.values[tri[1]], u.values[tri[2]]);
    out.value[t] = geom.grad[t] * local;
  }
  return out;
}

double lumped_mass_integrate(const P1Geometry& geom, const std::function<double(double)>& f,
                             const NodalField& u) {
  const TriangleMesh& mesh = *geom.mesh;
  if (u.mesh != &mesh) throw std::invalid_argument("lumped_mass_integrate: field does not match mesh");
  double total = 0.0;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (geom.lumped_mass[i] == 0.0) continue;
    const double fi = f(u.values[i]);
    if (!std::isfinite(fi))
      throw std::runtime_error("lumped_mass_integrate: non-finite integrand at node " + std::to_string(i));
    total += geom.lumped_mass[i] * fi;
  }
  return total;
}

void check_coefficient_bounds(const NodalField& c, double mu, const char* name) {
  if (!(mu > 1.0)) throw std::invalid_argument(std::string(name) + ": declared bound mu must exceed 1");
  const double lo = 1.0 / mu;
  for (int i = 0; i < c.values.size(); ++i) {
    const double v = c.values[i];
    if (!std::isfinite(v) || v < lo || v > mu)
      throw std::invalid_argument(std::string(name) + ": value " + std::to_string(v) + " at node " +
                                  std::to_string(i) + " violates [1/mu, mu] with mu=" + std::to_string(mu));
  }
}

Eigen::VectorXd vertex_average_per_triangle(const P1Geometry& geom, const NodalField& c) {
  const TriangleMesh& mesh = *geom.mesh;
  if (c.mesh != &mesh) throw std::invalid_argument("vertex_average_per_triangle: field does not match mesh");
  Eigen::VectorXd out(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    out[t] = (c.values[tri[0]] + c.values[tri[1]] + c.values[tri[2]]) / 3.0;
  }
  return out;
}

}  // namespace dnl
