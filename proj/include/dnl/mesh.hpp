#pragma once
// Triangulated polygonal domains: unit-square factory, text-format loader,
// boundary extraction, and the P1 element geometry shared by every solver.

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dnl {

struct TriangleMesh {
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 3>> triangles;       // positively oriented
  std::vector<int> boundary_nodes;                 // ordered along each loop
  std::vector<std::array<int, 2>> boundary_edges;  // oriented with the domain on the left
  std::vector<char> node_on_boundary;              // 0/1 lookup, size num_nodes()

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_boundary_nodes() const { return static_cast<int>(boundary_nodes.size()); }
};

/// Uniform diagonal-split triangulation of [0,1]^2 with (n+1)^2 nodes and
/// 2 n^2 triangles.
TriangleMesh make_unit_square_mesh(int subdivisions);

// Text format: line 1 "N_v N_t", then N_v lines "x y", then N_t lines
// "i j k" (0-based, positively oriented). The boundary is derived, not stored.
TriangleMesh read_mesh(std::istream& in);
TriangleMesh read_mesh_file(const std::string& path);
void write_mesh(std::ostream& out, const TriangleMesh& mesh);

// Derives boundary_edges / boundary_nodes / node_on_boundary and checks the
// mesh invariants: positive signed areas, every edge in at most two triangles
// (opposite orientations when shared), boundary edges chaining into closed
// loops. Throws std::runtime_error on violation.
void finalize_mesh(TriangleMesh& mesh);

// Per-triangle P1 geometry: areas, hat-function gradients (column j is the
// gradient of the hat function of local vertex j), lumped vertex masses.
struct P1Geometry {
  const TriangleMesh* mesh = nullptr;
  std::vector<double> area;
  std::vector<Eigen::Matrix<double, 2, 3>> grad;
  Eigen::VectorXd lumped_mass;
  double total_area = 0.0;
};

/// Throws std::runtime_error on a degenerate (non-positive area) triangle.
P1Geometry build_geometry(const TriangleMesh& mesh);

}  // namespace dnl
