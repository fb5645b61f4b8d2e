#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "dnl/asymptotics.hpp"
#include "oracles.hpp"

using namespace dnl;

namespace {

SweepSpec small_data_spec(const TriangleMesh& mesh) {
  SweepSpec spec;
  spec.mesh = &mesh;
  spec.gamma = make_field(mesh, 1.0);
  spec.potential = make_field(mesh, [](double x, double y) { return 1.0 + 0.5 * x + 0.25 * y; });
  spec.p = 3.0;
  spec.m = 4.0;
  spec.base = make_field(mesh, [](double x, double y) { return 1.5 + x + 0.3 * y; });
  spec.test = make_trace(mesh, [](double x, double) { return x; });
  for (int k = 3; k <= 9; ++k) spec.lambdas.push_back(std::pow(2.0, -k));
  spec.regime = Regime::small_data;
  return spec;
}

}  // namespace

TEST_CASE("anisotropy tensor closed forms") {
  const TriangleMesh mesh = make_unit_square_mesh(4);
  const NodalField gamma = make_field(mesh, 1.0);

  SUBCASE("p = 2 gives the isotropic tensor") {
    const NodalField g2 = make_field(mesh, [](double x, double y) { return 1.7 + x - 2 * y; });
    const NodalField gam = make_field(mesh, [](double x, double y) { return 1.0 + 0.2 * x * y; });
    const TriangleMatrixField A = anisotropy_matrix(gam, g2, 2.0);
    const P1Geometry geom = build_geometry(mesh);
    const Eigen::VectorXd gt = vertex_average_per_triangle(geom, gam);
    for (int t = 0; t < mesh.num_triangles(); ++t)
      CHECK((A.value[t] - gt[t] * Eigen::Matrix2d::Identity()).norm() <= 1e-14 * gt[t]);
  }

  SUBCASE("vertical unit gradient stretches the second axis") {
    const NodalField v = make_field(mesh, [](double, double y) { return y; });
    for (double p : {1.5, 3.0, 4.0}) {
      const TriangleMatrixField A = anisotropy_matrix(gamma, v, p);
      Eigen::Matrix2d expected = Eigen::Matrix2d::Identity();
      expected(1, 1) += p - 2.0;
      for (const auto& M : A.value) CHECK((M - expected).norm() <= 1e-14 * expected.norm());
    }
  }

  SUBCASE("unit gradient at p = 3 has determinant p-1 = 2") {
    const NodalField v = make_field(mesh, [](double x, double) { return x; });
    const TriangleMatrixField A = anisotropy_matrix(gamma, v, 3.0);
    for (const auto& M : A.value) CHECK(M.determinant() == doctest::Approx(2.0).epsilon(1e-13));
  }
}

TEST_CASE("anisotropy tensor spectral and determinant identities") {
  const TriangleMesh mesh = make_unit_square_mesh(6);
  const NodalField gamma =
      make_field(mesh, [](double x, double y) { return 1.2 + 0.4 * std::sin(x + 2 * y); });
  const NodalField v =
      make_field(mesh, [](double x, double y) { return 2.0 + x + 0.5 * y + 0.1 * x * y; });
  const P1Geometry geom = build_geometry(mesh);
  const Eigen::VectorXd gt = vertex_average_per_triangle(geom, gamma);
  const ElementGradientField eg = element_gradients(geom, v);

  for (double p : {1.5, 3.0}) {
    const TriangleMatrixField A = anisotropy_matrix(gamma, v, p);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const double gn = eg.value[t].norm();
      const double base = gt[t] * std::pow(gn, p - 2.0);
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A.value[t]);
      const double lo = std::min(base, base * (p - 1.0));
      const double hi = std::max(base, base * (p - 1.0));
      CHECK(es.eigenvalues()[0] == doctest::Approx(lo).epsilon(1e-12));
      CHECK(es.eigenvalues()[1] == doctest::Approx(hi).epsilon(1e-12));
      // planar determinant identity
      const double det_expected = (p - 1.0) * gt[t] * gt[t] * std::pow(gn, 2.0 * (p - 2.0));
      CHECK(A.value[t].determinant() == doctest::Approx(det_expected).epsilon(1e-12));
      CHECK((A.value[t] - A.value[t].transpose()).norm() == 0.0);
    }
  }
}

TEST_CASE("anisotropy tensor is even in the gradient direction, bitwise") {
  const TriangleMesh mesh = make_unit_square_mesh(5);
  const NodalField gamma = make_field(mesh, [](double x, double y) { return 1.0 + 0.3 * x + 0.2 * y; });
  const NodalField v = make_field(mesh, [](double x, double y) { return 1.0 + x - 0.7 * y; });
  NodalField neg{&mesh, -v.values};
  const TriangleMatrixField A = anisotropy_matrix(gamma, v, 3.0);
  const TriangleMatrixField B = anisotropy_matrix(gamma, neg, 3.0);
  for (size_t t = 0; t < A.value.size(); ++t)
    CHECK(std::memcmp(A.value[t].data(), B.value[t].data(), sizeof(double) * 4) == 0);
}

TEST_CASE("critical base fields are rejected") {
  const TriangleMesh mesh = make_unit_square_mesh(4);
  const NodalField gamma = make_field(mesh, 1.0);
  CHECK_THROWS_AS(anisotropy_matrix(gamma, make_field(mesh, 3.0), 3.0), NoncriticalityError);
  // one flat triangle among sloped ones also violates noncriticality
  NodalField v = make_field(mesh, [](double x, double y) { return x + y; });
  const auto& tri = mesh.triangles[0];
  const double c = v.values[tri[0]];
  NodalField flat = v;
  flat.values[tri[1]] = c;
  flat.values[tri[2]] = c;
  CHECK_THROWS_AS(anisotropy_matrix(gamma, flat, 3.0), NoncriticalityError);
}

TEST_CASE("correction field vanishes when V = 0") {
  const TriangleMesh mesh = make_unit_square_mesh(6);
  const NodalField gamma = make_field(mesh, 1.0);
  const NodalField V = make_field(mesh, 0.0);
  const NodalField v = make_field(mesh, [](double x, double y) { return 1.0 + x + 0.2 * y; });
  const NodalField R = solve_correction(gamma, V, v, 3.0, 4.0);
  CHECK(R.values.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("correction field matches a Richardson-extrapolated reference") {
  // p = 2, gamma = 1, v = x1, V = 1, m = 1: the correction solves
  // Laplace R = x1 with zero boundary values
  auto solve_at = [](int n) {
    const TriangleMesh mesh = make_unit_square_mesh(n);
    const NodalField gamma = make_field(mesh, 1.0);
    const NodalField V = make_field(mesh, 1.0);
    const NodalField v = make_field(mesh, [](double x, double) { return x; });
    NodalField R = solve_correction(gamma, V, v, 2.0, 1.0);
    return R.values;
  };
  const Eigen::VectorXd coarse = solve_at(64);
  const Eigen::VectorXd mid = solve_at(128);
  const Eigen::VectorXd fine = solve_at(256);

  auto at = [](const Eigen::VectorXd& u, int n, int i, int j) { return u[j * (n + 1) + i]; };
  double worst = 0.0;
  for (int j = 0; j <= 64; ++j) {
    for (int i = 0; i <= 64; ++i) {
      const double reference =
          (4.0 * at(fine, 256, 4 * i, 4 * j) - at(mid, 128, 2 * i, 2 * j)) / 3.0;
      worst = std::max(worst, std::abs(at(coarse, 64, i, j) - reference));
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("correction field is nonpositive for positive source data") {
  const TriangleMesh mesh = make_unit_square_mesh(10);
  const NodalField gamma = make_field(mesh, 1.0);
  const NodalField V = make_field(mesh, [](double x, double y) { return 1.0 + x + y; });
  const NodalField v = make_field(mesh, [](double x, double) { return 1.0 + x; });
  for (double p : {2.0, 3.0}) {
    const NodalField R = solve_correction(gamma, V, v, p, 2.0);
    CHECK(R.values.maxCoeff() <= 1e-14);
    CHECK(R.values.minCoeff() < 0.0);
  }
}

TEST_CASE("small-data sweep: correction exponent and coefficient") {
  const TriangleMesh mesh = make_unit_square_mesh(12);
  SweepSpec spec = small_data_spec(mesh);
  const ScalingSweep sweep = run_scaling_sweep(spec);

  const NodalField ext = extend_trace(mesh, spec.test, spec.extension);
  const double leading = p_flux_pairing(spec.gamma, spec.base, ext, spec.p);
  const ExpansionFit fit = fit_expansion(sweep, leading);

  REQUIRE(fit.correction_detectable);
  CHECK(fit.correction_exponent_fitted == doctest::Approx(spec.m).epsilon(0.05));
  CHECK(fit.correction_coeff ==
        doctest::Approx(fit.direct_correction_integral).epsilon(0.05));

  // the remainder at the coarsest lambda is genuinely the next order
  CHECK(std::abs(fit.remainders.front()) <
        0.5 * std::abs(sweep.pairings.front()));

  // scaled pairings converge to the leading integral as lambda shrinks
  const double lam = spec.lambdas.back();
  CHECK(sweep.pairings.back() / std::pow(lam, spec.p - 1.0) ==
        doctest::Approx(leading).epsilon(1e-3));
}

TEST_CASE("large-data sweep mirrors the small-data expansion") {
  const TriangleMesh mesh = make_unit_square_mesh(12);
  SweepSpec spec = small_data_spec(mesh);
  spec.m = 1.0;  // m < p-1
  spec.regime = Regime::large_data;
  const ScalingSweep sweep = run_scaling_sweep(spec);

  const NodalField ext = extend_trace(mesh, spec.test, spec.extension);
  const double leading = p_flux_pairing(spec.gamma, spec.base, ext, spec.p);
  const ExpansionFit fit = fit_expansion(sweep, leading);

  REQUIRE(fit.correction_detectable);
  CHECK(fit.correction_exponent_fitted == doctest::Approx(-spec.m).epsilon(0.05));
  CHECK(fit.correction_coeff ==
        doctest::Approx(fit.direct_correction_integral).epsilon(0.05));
}

TEST_CASE("V = 0 control: no correction detectable") {
  const TriangleMesh mesh = make_unit_square_mesh(10);
  SweepSpec spec = small_data_spec(mesh);
  spec.potential = make_field(mesh, 0.0);
  const ScalingSweep sweep = run_scaling_sweep(spec);
  const NodalField ext = extend_trace(mesh, spec.test, spec.extension);
  const double leading = p_flux_pairing(spec.gamma, spec.base, ext, spec.p);
  const ExpansionFit fit = fit_expansion(sweep, leading);
  CHECK_FALSE(fit.correction_detectable);
  CHECK(fit.dropped.size() >= 4);
  // homogeneity makes the raw pairings scale exactly as lambda^{p-1}
  CHECK(fit.leading_exponent_fitted == doctest::Approx(spec.p - 1.0).epsilon(1e-10));
  CHECK(fit.direct_correction_integral == doctest::Approx(0.0).epsilon(1e-14));

  // the extracted correction family sits at the solver noise floor
  const CorrectionConvergence conv = correction_convergence(sweep);
  for (double e : conv.value_err) CHECK(e <= 1e-6);
}

TEST_CASE("fit_expansion needs at least four lambdas") {
  const TriangleMesh mesh = make_unit_square_mesh(6);
  SweepSpec spec = small_data_spec(mesh);
  spec.lambdas = {0.125, 0.0625, 0.03125};
  const ScalingSweep sweep = run_scaling_sweep(spec);
  CHECK_THROWS_AS(fit_expansion(sweep, 1.0), std::invalid_argument);
}

TEST_CASE("correction convergence is monotone down to the noise floor") {
  const TriangleMesh mesh = make_unit_square_mesh(12);
  SweepSpec spec = small_data_spec(mesh);
  const ScalingSweep sweep = run_scaling_sweep(spec);
  const CorrectionConvergence conv = correction_convergence(sweep);
  const double floor_val = 1e-6 * conv.R.values.cwiseAbs().maxCoeff();
  for (size_t k = 1; k < conv.value_err.size(); ++k) {
    const bool decreased = conv.value_err[k] < conv.value_err[k - 1];
    CHECK((decreased || conv.value_err[k] <= floor_val));
  }
  for (size_t k = 1; k < conv.grad_err.size(); ++k) {
    const bool decreased = conv.grad_err[k] < conv.grad_err[k - 1];
    CHECK((decreased || conv.grad_err[k] <= floor_val));
  }
}

TEST_CASE("sweep validation") {
  const TriangleMesh mesh = make_unit_square_mesh(6);
  SweepSpec spec = small_data_spec(mesh);

  SUBCASE("regime must match the exponents") {
    spec.regime = Regime::large_data;  // but m = 4 > p-1 = 2
    CHECK_THROWS_AS(run_scaling_sweep(spec), std::invalid_argument);
  }
  SUBCASE("lambdas must decrease within (0,1)") {
    spec.lambdas = {0.5, 0.5, 0.25, 0.125};
    CHECK_THROWS_AS(run_scaling_sweep(spec), std::invalid_argument);
    spec.lambdas = {1.5, 0.5, 0.25, 0.125};
    CHECK_THROWS_AS(run_scaling_sweep(spec), std::invalid_argument);
  }
  SUBCASE("base must be p-harmonic to solver tolerance") {
    spec.base = make_field(mesh, [](double x, double y) { return 1.5 + x * x + 0.3 * y; });
    CHECK_THROWS_AS(run_scaling_sweep(spec), std::invalid_argument);
  }
  SUBCASE("critical base is rejected") {
    spec.base = make_field(mesh, 2.0);
    CHECK_THROWS_AS(run_scaling_sweep(spec), NoncriticalityError);
  }
}
