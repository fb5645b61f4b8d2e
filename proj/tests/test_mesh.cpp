#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "dnl/fields.hpp"
#include "dnl/mesh.hpp"

using namespace dnl;

TEST_CASE("unit square mesh counts") {
  const TriangleMesh m1 = make_unit_square_mesh(1);
  CHECK(m1.num_nodes() == 4);
  CHECK(m1.num_triangles() == 2);
  CHECK(m1.num_boundary_nodes() == 4);

  const TriangleMesh m2 = make_unit_square_mesh(2);
  CHECK(m2.num_nodes() == 9);
  CHECK(m2.num_triangles() == 8);
  CHECK(m2.num_boundary_nodes() == 8);
}

TEST_CASE("triangle areas sum to the domain area") {
  const TriangleMesh mesh = make_unit_square_mesh(32);
  const P1Geometry geom = build_geometry(mesh);
  CHECK(geom.total_area == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("boundary structure") {
  const TriangleMesh mesh = make_unit_square_mesh(4);
  // boundary nodes are exactly the nodes incident to boundary edges
  std::vector<char> incident(mesh.num_nodes(), 0);
  for (const auto& e : mesh.boundary_edges) {
    incident[e[0]] = 1;
    incident[e[1]] = 1;
  }
  for (int i = 0; i < mesh.num_nodes(); ++i) CHECK(incident[i] == mesh.node_on_boundary[i]);

  // edges chain into a single closed loop
  CHECK(mesh.boundary_edges.size() == mesh.boundary_nodes.size());
  for (size_t k = 0; k < mesh.boundary_edges.size(); ++k) {
    CHECK(mesh.boundary_edges[k][0] == mesh.boundary_nodes[k]);
    CHECK(mesh.boundary_edges[k][1] == mesh.boundary_nodes[(k + 1) % mesh.boundary_nodes.size()]);
  }

  // outward normal of each boundary edge points away from the square's center
  for (const auto& e : mesh.boundary_edges) {
    const Eigen::Vector2d a = mesh.nodes[e[0]], b = mesh.nodes[e[1]];
    const Eigen::Vector2d tangent = b - a;
    const Eigen::Vector2d outward(tangent.y(), -tangent.x());
    const Eigen::Vector2d mid = 0.5 * (a + b) - Eigen::Vector2d(0.5, 0.5);
    CHECK(outward.dot(mid) > 0.0);
  }
}

TEST_CASE("element gradients are exact for affine fields") {
  const TriangleMesh mesh = make_unit_square_mesh(5);
  const P1Geometry geom = build_geometry(mesh);

  const NodalField u1 = make_field(mesh, [](double x, double) { return x; });
  for (const auto& g : element_gradients(geom, u1).value) {
    CHECK(g.x() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g.y() == doctest::Approx(0.0).epsilon(1e-14));
  }

  const NodalField u2 = make_field(mesh, [](double x, double y) { return 3.0 * x - 2.0 * y + 7.0; });
  for (const auto& g : element_gradients(geom, u2).value) {
    CHECK(g.x() == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(g.y() == doctest::Approx(-2.0).epsilon(1e-13));
  }
}

TEST_CASE("element gradients track the analytic gradient of x^2 at centroids") {
  const TriangleMesh mesh = make_unit_square_mesh(32);
  const P1Geometry geom = build_geometry(mesh);
  const NodalField u = make_field(mesh, [](double x, double) { return x * x; });
  const ElementGradientField eg = element_gradients(geom, u);
  const double h = 1.0 / 32.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector2d centroid =
        (mesh.nodes[tri[0]] + mesh.nodes[tri[1]] + mesh.nodes[tri[2]]) / 3.0;
    CHECK(std::abs(eg.value[t].x() - 2.0 * centroid.x()) <= h);
    CHECK(std::abs(eg.value[t].y()) <= h);
  }
}

TEST_CASE("element gradients are linear in the field") {
  const TriangleMesh mesh = make_unit_square_mesh(7);
  const P1Geometry geom = build_geometry(mesh);
  const NodalField a = make_field(mesh, [](double x, double y) { return std::sin(3 * x) + y * y; });
  const NodalField b = make_field(mesh, [](double x, double y) { return std::cos(x - 2 * y); });
  NodalField sum{&mesh, 2.0 * a.values + 3.0 * b.values};
  const auto ga = element_gradients(geom, a), gb = element_gradients(geom, b),
             gs = element_gradients(geom, sum);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    CHECK((gs.value[t] - 2.0 * ga.value[t] - 3.0 * gb.value[t]).norm() < 1e-13);
}

TEST_CASE("lumped quadrature") {
  const TriangleMesh mesh = make_unit_square_mesh(8);
  const P1Geometry geom = build_geometry(mesh);
  const NodalField x1 = make_field(mesh, [](double x, double) { return x; });

  CHECK(lumped_mass_integrate(geom, [](double) { return 1.0; }, x1) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lumped_mass_integrate(geom, [](double y) { return y; }, x1) ==
        doctest::Approx(0.5).epsilon(1e-12));

  // second-order convergence of the vertex rule on f(u) = u^2, u = x1
  double err[2];
  int idx = 0;
  for (int n : {16, 32}) {
    const TriangleMesh m = make_unit_square_mesh(n);
    const P1Geometry g = build_geometry(m);
    const NodalField u = make_field(m, [](double x, double) { return x; });
    err[idx++] = std::abs(lumped_mass_integrate(g, [](double y) { return y * y; }, u) - 1.0 / 3.0);
  }
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("lumped quadrature rejects non-finite integrands") {
  const TriangleMesh mesh = make_unit_square_mesh(2);
  const P1Geometry geom = build_geometry(mesh);
  const NodalField u = make_field(mesh, 0.0);
  CHECK_THROWS_AS(lumped_mass_integrate(geom, [](double y) { return 1.0 / y; }, u),
                  std::runtime_error);
}

TEST_CASE("degenerate triangles are rejected") {
  TriangleMesh mesh;
  mesh.nodes = {{0, 0}, {1, 0}, {2, 0}, {0, 1}};
  mesh.triangles = {{0, 1, 3}, {1, 2, 3}};
  finalize_mesh(mesh);
  mesh.nodes[3] = {2, 0};  // collapse after finalize to hit the geometry check
  CHECK_THROWS_AS(build_geometry(mesh), std::runtime_error);
}

TEST_CASE("mesh file round trip and validation") {
  const TriangleMesh mesh = make_unit_square_mesh(3);
  std::stringstream buf;
  write_mesh(buf, mesh);
  const TriangleMesh back = read_mesh(buf);
  CHECK(back.num_nodes() == mesh.num_nodes());
  CHECK(back.num_triangles() == mesh.num_triangles());
  CHECK(back.num_boundary_nodes() == mesh.num_boundary_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i)
    CHECK((back.nodes[i] - mesh.nodes[i]).norm() == 0.0);

  std::stringstream bad("4 1\n0 0\n1 0\n1 1\n0 1\n0 2 1\n");  // negatively oriented
  CHECK_THROWS_AS(read_mesh(bad), std::runtime_error);

  std::stringstream truncated("4 2\n0 0\n1 0\n1 1\n");
  CHECK_THROWS_AS(read_mesh(truncated), std::runtime_error);
}

TEST_CASE("declared coefficient bounds") {
  const TriangleMesh mesh = make_unit_square_mesh(3);
  const NodalField ok = make_field(mesh, [](double x, double) { return 1.0 + 0.5 * x; });
  CHECK_NOTHROW(check_coefficient_bounds(ok, 2.0, "gamma"));
  CHECK_THROWS_AS(check_coefficient_bounds(ok, 1.4, "gamma"), std::invalid_argument);  // 1.5 > mu
  CHECK_THROWS_AS(check_coefficient_bounds(ok, 1.0, "gamma"), std::invalid_argument);  // mu <= 1
  const NodalField low = make_field(mesh, 0.1);
  CHECK_THROWS_AS(check_coefficient_bounds(low, 5.0, "eps"), std::invalid_argument);   // below 1/mu
}

TEST_CASE("loader accepts a non-square polygon and matches its shoelace area") {
  // L-shaped hexagon triangulated by hand
  std::stringstream in(
      "8 6\n"
      "0 0\n1 0\n2 0\n0 1\n1 1\n2 1\n0 2\n1 2\n"
      "0 1 4\n0 4 3\n1 2 5\n1 5 4\n3 4 7\n3 7 6\n");
  const TriangleMesh mesh = read_mesh(in);
  const P1Geometry geom = build_geometry(mesh);
  CHECK(geom.total_area == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(mesh.num_boundary_nodes() == 8);
}
