#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "dnl/linearization.hpp"
#include "oracles.hpp"

using namespace dnl;

namespace {

// nonlinear base solution with data sloping across the square (one boundary
// minimum, one maximum), kept noncritical by the slope
struct Base {
  TriangleMesh mesh;
  EllipticProblem pr;
  EllipticSolution sol;
};

Base make_base(int n, double p, double m, double V_const) {
  Base b;
  b.mesh = make_unit_square_mesh(n);
  b.pr.mesh = &b.mesh;
  b.pr.gamma = make_field(b.mesh, [](double x, double y) { return 1.0 + 0.2 * x + 0.1 * y; });
  b.pr.potential = make_field(b.mesh, V_const);
  b.pr.p = p;
  b.pr.m = m;
  b.pr.dirichlet = make_trace(b.mesh, [](double x, double y) { return 1.5 + x + 0.2 * y; });
  b.sol = solve(b.pr);
  return b;
}

}  // namespace

TEST_CASE("linearize_at closed forms") {
  SUBCASE("V = 0 kills the zeroth-order coefficient") {
    Base b = make_base(6, 3.0, 2.0, 0.0);
    const LinearizedProblem lin = linearize_at(b.pr, b.sol);
    CHECK(lin.zeroth.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("m = 1 gives the potential itself") {
    Base b = make_base(6, 3.0, 1.0, 0.7);
    const LinearizedProblem lin = linearize_at(b.pr, b.sol);
    CHECK((lin.zeroth.array() - 0.7).abs().maxCoeff() <= 1e-14);
  }
  SUBCASE("p = 2 gives the isotropic tensor") {
    Base b = make_base(6, 2.0, 2.0, 0.5);
    const LinearizedProblem lin = linearize_at(b.pr, b.sol);
    const P1Geometry geom = build_geometry(b.mesh);
    const Eigen::VectorXd gt = vertex_average_per_triangle(geom, b.pr.gamma);
    for (int t = 0; t < b.mesh.num_triangles(); ++t)
      CHECK((lin.A0.value[t] - gt[t] * Eigen::Matrix2d::Identity()).norm() <= 1e-13);
  }
}

TEST_CASE("linearized solves") {
  Base b = make_base(8, 3.0, 2.0, 1.0);
  const LinearizedProblem lin = linearize_at(b.pr, b.sol);

  SUBCASE("zero data gives the zero solution") {
    const NodalField wdot = solve_linearized(lin, make_trace(b.mesh, 0.0));
    CHECK(wdot.values.cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("constants are solutions when V = 0") {
    Base b0 = make_base(8, 3.0, 2.0, 0.0);
    const LinearizedProblem lin0 = linearize_at(b0.pr, b0.sol);
    const NodalField wdot = solve_linearized(lin0, make_trace(b0.mesh, 3.0));
    CHECK((wdot.values.array() - 3.0).abs().maxCoeff() <= 1e-12);
  }
  SUBCASE("solution is linear in the data") {
    const BoundaryTrace f1 = make_trace(b.mesh, [](double x, double y) { return x + 0.3 * y; });
    const BoundaryTrace f2 = make_trace(b.mesh, [](double x, double y) { return std::cos(2 * x) - y; });
    BoundaryTrace sum = f1;
    sum.values += f2.values;
    const NodalField w1 = solve_linearized(lin, f1);
    const NodalField w2 = solve_linearized(lin, f2);
    const NodalField ws = solve_linearized(lin, sum);
    CHECK((ws.values - w1.values - w2.values).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("linearized pairing: zero data, symmetry") {
  Base b = make_base(10, 3.0, 2.0, 1.0);
  const LinearizedProblem lin = linearize_at(b.pr, b.sol);
  const BoundaryTrace f = make_trace(b.mesh, [](double x, double y) { return std::cos(2 * x) + y; });
  const BoundaryTrace omega = make_trace(b.mesh, [](double x, double y) { return x * x - 0.5 * y; });

  CHECK(std::abs(linearized_dtn(lin, make_trace(b.mesh, 0.0), omega)) <= 1e-14);
  const double ab = linearized_dtn(lin, f, omega);
  const double ba = linearized_dtn(lin, omega, f);
  CHECK(std::abs(ab - ba) <= 1e-10 * std::max(1.0, std::abs(ab)));
}

TEST_CASE("finite differences of the nonlinear pairing converge to the linearized pairing") {
  Base b = make_base(12, 3.0, 2.0, 1.0);
  const LinearizedProblem lin = linearize_at(b.pr, b.sol);
  const BoundaryTrace f = make_trace(b.mesh, [](double x, double y) { return std::cos(2 * x) + 0.5 * y; });
  const BoundaryTrace omega = make_trace(b.mesh, [](double x, double) { return x; });
  const double ldtn = linearized_dtn(lin, f, omega);
  const double base_pairing = dtn_pair(b.pr, b.sol, omega);
  const double scale = b.pr.dirichlet.values.cwiseAbs().maxCoeff();

  std::vector<double> errs;
  for (double tau_rel : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
    const double tau = tau_rel * scale;
    EllipticProblem bumped = b.pr;
    bumped.dirichlet.values += tau * f.values;
    const EllipticSolution sol_tau = solve(bumped);
    const double fd = (dtn_pair(bumped, sol_tau, omega) - base_pairing) / tau;
    errs.push_back(std::abs(fd - ldtn));
  }
  for (size_t k = 0; k + 1 < errs.size(); ++k) {
    const double ratio = errs[k] / errs[k + 1];
    CHECK(ratio >= 1.6);
    CHECK(ratio <= 2.4);
  }
}

TEST_CASE("pairing matrix over a boundary basis is positive semidefinite") {
  Base b = make_base(4, 3.0, 2.0, 1.0);
  const LinearizedProblem lin = linearize_at(b.pr, b.sol);
  const int nb = b.mesh.num_boundary_nodes();
  Eigen::MatrixXd M(nb, nb);
  for (int i = 0; i < nb; ++i) {
    BoundaryTrace fi = make_trace(b.mesh, 0.0);
    fi.values[i] = 1.0;
    for (int j = 0; j < nb; ++j) {
      BoundaryTrace hj = make_trace(b.mesh, 0.0);
      hj.values[j] = 1.0;
      M(i, j) = linearized_dtn(lin, fi, hj);
    }
  }
  const double scale = M.cwiseAbs().maxCoeff();
  CHECK((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  CHECK(es.eigenvalues().minCoeff() >= -1e-9 * scale);
}

TEST_CASE("directional derivative of the anisotropy tensor") {
  const TriangleMesh mesh = make_unit_square_mesh(6);
  const NodalField gamma = make_field(mesh, [](double x, double y) { return 1.0 + 0.25 * x + 0.1 * y; });
  const NodalField v0 = make_field(mesh, [](double x, double y) { return 1.0 + x + 0.4 * y; });
  const NodalField vdot =
      make_field(mesh, [](double x, double y) { return std::sin(2 * x) + 0.3 * y * y; });

  SUBCASE("p = 2 gives the zero derivative") {
    const TriangleMatrixField D = anisotropy_derivative(gamma, v0, vdot, 2.0);
    for (const auto& M : D.value) CHECK(M.norm() == 0.0);
  }

  SUBCASE("matches central finite differences of the tensor family") {
    for (double p : {1.5, 3.0, 4.5}) {
      const TriangleMatrixField D = anisotropy_derivative(gamma, v0, vdot, p);
      const double h = 1e-6;
      NodalField plus{&mesh, v0.values + h * vdot.values};
      NodalField minus{&mesh, v0.values - h * vdot.values};
      const TriangleMatrixField Ap = anisotropy_matrix(gamma, plus, p);
      const TriangleMatrixField Am = anisotropy_matrix(gamma, minus, p);
      double scale = 0.0;
      for (const auto& M : D.value) scale = std::max(scale, M.norm());
      for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Eigen::Matrix2d fd = (Ap.value[t] - Am.value[t]) / (2.0 * h);
        CHECK((fd - D.value[t]).norm() <= 1e-6 * scale);
      }
    }
  }

  SUBCASE("derivative along the base field itself agrees with the family") {
    // A[(1+t) v0] = (1+t)^{p-2} A[v0], so the derivative at t = 0 is (p-2) A[v0]
    for (double p : {1.5, 3.0}) {
      const TriangleMatrixField D = anisotropy_derivative(gamma, v0, v0, p);
      const TriangleMatrixField A = anisotropy_matrix(gamma, v0, p);
      for (int t = 0; t < mesh.num_triangles(); ++t)
        CHECK((D.value[t] - (p - 2.0) * A.value[t]).norm() <= 1e-12 * A.value[t].norm());
    }
  }

  SUBCASE("linear in the direction") {
    const NodalField w1 = make_field(mesh, [](double x, double y) { return x * y; });
    const NodalField w2 = make_field(mesh, [](double x, double y) { return std::cos(x + y); });
    NodalField both{&mesh, 2.0 * w1.values - 3.0 * w2.values};
    const TriangleMatrixField D1 = anisotropy_derivative(gamma, v0, w1, 3.0);
    const TriangleMatrixField D2 = anisotropy_derivative(gamma, v0, w2, 3.0);
    const TriangleMatrixField Db = anisotropy_derivative(gamma, v0, both, 3.0);
    for (int t = 0; t < mesh.num_triangles(); ++t)
      CHECK((Db.value[t] - 2.0 * D1.value[t] + 3.0 * D2.value[t]).norm() <=
            1e-12 * (1.0 + Db.value[t].norm()));
  }
}

TEST_CASE("planar metric identities") {
  const TriangleMesh mesh = make_unit_square_mesh(6);
  const NodalField gamma = make_field(mesh, [](double x, double y) { return 1.1 + 0.3 * x * y; });
  const NodalField w0 = make_field(mesh, [](double x, double y) { return 2.0 + x + 0.35 * y; });

  SUBCASE("p = 2 gives the identity metric") {
    const Metric2D met = metric_2d(gamma, w0, 2.0);
    for (const auto& g : met.g) CHECK((g - Eigen::Matrix2d::Identity()).norm() <= 1e-14);
  }

  for (double p : {1.5, 3.0, 4.0}) {
    const Metric2D met = metric_2d(gamma, w0, p);
    const TriangleMatrixField A = anisotropy_matrix(gamma, w0, p);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      CHECK(met.g[t].determinant() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(met.detA[t] == doctest::Approx(A.value[t].determinant()).epsilon(1e-12));
      const Eigen::Matrix2d from_A = std::sqrt(A.value[t].determinant()) * A.value[t].inverse();
      CHECK((met.g[t] - from_A).norm() <= 1e-12 * from_A.norm());
    }
  }
}

TEST_CASE("linearization error paths") {
  SUBCASE("critical base solution") {
    Base b = make_base(5, 3.0, 2.0, 0.0);
    b.pr.dirichlet = make_trace(b.mesh, 2.0);  // constant data -> constant solution
    b.sol = solve(b.pr);
    CHECK_THROWS_AS(linearize_at(b.pr, b.sol), NoncriticalityError);
  }
  SUBCASE("m < 1 with a vanishing base value") {
    TriangleMesh mesh = make_unit_square_mesh(5);
    EllipticProblem pr;
    pr.mesh = &mesh;
    pr.gamma = make_field(mesh, 1.0);
    pr.potential = make_field(mesh, 1.0);
    pr.p = 3.0;
    pr.m = 0.5;
    pr.dirichlet = make_trace(mesh, [](double x, double) { return x; });  // zero on one edge
    const EllipticSolution sol = solve(pr);
    CHECK_THROWS_AS(linearize_at(pr, sol), std::invalid_argument);
  }
  SUBCASE("stale solution") {
    Base b = make_base(5, 3.0, 2.0, 1.0);
    b.pr.m = 3.0;  // mutate after solving
    CHECK_THROWS_AS(linearize_at(b.pr, b.sol), std::invalid_argument);
  }
}
