#pragma once
// Nodal scalar fields, boundary traces, element gradients, and the lumped
// (vertex) quadrature rule used for all zeroth-order terms.

#include <functional>

#include <Eigen/Dense>

#include "dnl/mesh.hpp"

namespace dnl {

struct NodalField {
  const TriangleMesh* mesh = nullptr;
  Eigen::VectorXd values;  // one value per node
};

struct BoundaryTrace {
  const TriangleMesh* mesh = nullptr;
  Eigen::VectorXd values;  // indexed parallel to mesh->boundary_nodes
};

using ScalarFn = std::function<double(double, double)>;

NodalField make_field(const TriangleMesh&, double constant);
NodalField make_field(const TriangleMesh&, const ScalarFn&);
BoundaryTrace make_trace(const TriangleMesh&, double constant);
BoundaryTrace make_trace(const TriangleMesh&, const ScalarFn&);
BoundaryTrace trace_of(const NodalField&);

/// Per-triangle constant gradient of the P1 interpolant, with areas.
struct ElementGradientField {
  std::vector<Eigen::Vector2d> value;
  std::vector<double> area;
};
ElementGradientField element_gradients(const P1Geometry&, const NodalField& u);

/// Per-triangle symmetric 2x2 matrices (anisotropy tensors, metrics).
struct TriangleMatrixField {
  std::vector<Eigen::Matrix2d> value;
};

// Vertex-quadrature integral  sum_T (area_T/3) sum_{v in T} f(u(v)).
// Throws std::runtime_error if f evaluates to a non-finite value.
double lumped_mass_integrate(const P1Geometry&, const std::function<double(double)>& f,
                             const NodalField& u);

// Coefficient admissibility: mu^-1 <= value <= mu for a declared mu > 1.
void check_coefficient_bounds(const NodalField&, double mu, const char* name);

/// Vertex average of a nodal field on each triangle.
Eigen::VectorXd vertex_average_per_triangle(const P1Geometry&, const NodalField&);

}  // namespace dnl
