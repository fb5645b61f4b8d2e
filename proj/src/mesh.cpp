#include "dnl/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dnl {

namespace {

double signed_area(const TriangleMesh& mesh, const std::array<int, 3>& tri) {
  const Eigen::Vector2d& a = mesh.nodes[tri[0]];
  const Eigen::Vector2d& b = mesh.nodes[tri[1]];
  const Eigen::Vector2d& c = mesh.nodes[tri[2]];
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

}  // namespace

TriangleMesh make_unit_square_mesh(int subdivisions) {
  if (subdivisions < 1) throw std::invalid_argument("make_unit_square_mesh: subdivisions must be >= 1");
  const int n = subdivisions;
  const int np = n + 1;

  TriangleMesh mesh;
  mesh.nodes.reserve(static_cast<size_t>(np) * np);
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < np; ++i)
      mesh.nodes.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);

  auto vid = [np](int i, int j) { return j * np + i; };
  mesh.triangles.reserve(static_cast<size_t>(2) * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j);
      const int v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1);
      const int v11 = vid(i + 1, j + 1);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  }
  finalize_mesh(mesh);
  return mesh;
}

void finalize_mesh(TriangleMesh& mesh) {
  const int nv = mesh.num_nodes();
  if (nv < 3 || mesh.triangles.empty()) throw std::runtime_error("mesh: needs at least one triangle");

  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int v : mesh.triangles[t])
      if (v < 0 || v >= nv)
        throw std::runtime_error("mesh: triangle " + std::to_string(t) + " has a node index out of range");
    if (signed_area(mesh, mesh.triangles[t]) <= 0.0)
      throw std::runtime_error("mesh: triangle " + std::to_string(t) + " is not positively oriented");
  }

  // Count directed edges; a consistent orientation means every undirected
  // edge occurs once (boundary) or twice with opposite directions (interior).
  std::map<std::pair<int, int>, int> directed;
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e];
      const int b = tri[(e + 1) % 3];
      if (a == b) throw std::runtime_error("mesh: triangle with a repeated vertex");
      if (++directed[{a, b}] > 1)
        throw std::runtime_error("mesh: duplicated directed edge (inconsistent orientation or overlap)");
    }
  }

  mesh.boundary_edges.clear();
  std::map<int, int> next_on_boundary;  // start node -> end node
  for (const auto& [edge, count] : directed) {
    (void)count;
    if (directed.find({edge.second, edge.first}) == directed.end()) {
      mesh.boundary_edges.push_back({edge.first, edge.second});
      if (!next_on_boundary.emplace(edge.first, edge.second).second)
        throw std::runtime_error("mesh: boundary is not a union of simple loops");
    }
  }
  if (mesh.boundary_edges.empty()) throw std::runtime_error("mesh: no boundary found");

  // Walk the loops, each starting from its smallest node index.
  mesh.boundary_nodes.clear();
  std::map<int, int> remaining = next_on_boundary;
  while (!remaining.empty()) {
    const int start = remaining.begin()->first;
    int node = start;
    do {
      auto it = remaining.find(node);
      if (it == remaining.end()) throw std::runtime_error("mesh: boundary loop is not closed");
      mesh.boundary_nodes.push_back(node);
      node = it->second;
      remaining.erase(it);
    } while (node != start);
  }

  mesh.node_on_boundary.assign(nv, 0);
  for (int b : mesh.boundary_nodes) mesh.node_on_boundary[b] = 1;

  // Order boundary_edges to follow boundary_nodes.
  std::vector<std::array<int, 2>> ordered;
  ordered.reserve(mesh.boundary_edges.size());
  for (int b : mesh.boundary_nodes) ordered.push_back({b, next_on_boundary.at(b)});
  mesh.boundary_edges = std::move(ordered);
}

TriangleMesh read_mesh(std::istream& in) {
  TriangleMesh mesh;
  int nv = 0, nt = 0;
  if (!(in >> nv >> nt)) throw std::runtime_error("mesh file: failed to read header \"N_v N_t\"");
  if (nv < 3 || nt < 1) throw std::runtime_error("mesh file: invalid counts in header");
  mesh.nodes.resize(nv);
  for (int i = 0; i < nv; ++i) {
    double x, y;
    if (!(in >> x >> y)) throw std::runtime_error("mesh file: failed to read node " + std::to_string(i));
    mesh.nodes[i] = {x, y};
  }
  mesh.triangles.resize(nt);
  for (int t = 0; t < nt; ++t) {
    int i, j, k;
    if (!(in >> i >> j >> k)) throw std::runtime_error("mesh file: failed to read triangle " + std::to_string(t));
    mesh.triangles[t] = {i, j, k};
  }
  finalize_mesh(mesh);
  return mesh;
}

TriangleMesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("mesh file: cannot open " + path);
  return read_mesh(in);
}

void write_mesh(std::ostream& out, const TriangleMesh& mesh) {
  out << mesh.num_nodes() << ' ' << mesh.num_triangles() << '\n';
  std::ostringstream fmt;
  fmt.precision(17);
  for (const auto& nd : mesh.nodes) {
    fmt.str("");
    fmt << nd.x() << ' ' << nd.y() << '\n';
    out << fmt.str();
  }
  for (const auto& tri : mesh.triangles) out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
}

P1Geometry build_geometry(const TriangleMesh& mesh) {
  P1Geometry geom;
  geom.mesh = &mesh;
  const int nt = mesh.num_triangles();
  geom.area.resize(nt);
  geom.grad.resize(nt);
  geom.lumped_mass = Eigen::VectorXd::Zero(mesh.num_nodes());

  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    const double a = signed_area(mesh, tri);
    if (!(a > 0.0))
      throw std::runtime_error("geometry: degenerate triangle " + std::to_string(t) +
                               " (area " + std::to_string(a) + ")");
    geom.area[t] = a;
    geom.total_area += a;
    Eigen::Matrix<double, 2, 3>& G = geom.grad[t];
    for (int i = 0; i < 3; ++i) {
      // grad of hat_i = clockwise rotation of the opposite edge / (2 area)
      const Eigen::Vector2d e = mesh.nodes[tri[(i + 1) % 3]] - mesh.nodes[tri[(i + 2) % 3]];
      G.col(i) = Eigen::Vector2d(e.y(), -e.x()) / (2.0 * a);
    }
    for (int i = 0; i < 3; ++i) geom.lumped_mass[tri[i]] += a / 3.0;
  }
  return geom;
}

}  // namespace dnl
