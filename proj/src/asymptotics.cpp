#include "dnl/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "assembly.hpp"

namespace dnl {

namespace {

void check_shared_mesh(const NodalField& a, const NodalField& b, const char* what) {
  if (!a.mesh || a.mesh != b.mesh) throw std::invalid_argument(std::string(what) + ": fields on different meshes");
}

struct LineFit {
  double slope = 0.0, intercept = 0.0, slope_stderr = 0.0, rms = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  f.slope_stderr = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
  return f;
}

}  // namespace

TriangleMatrixField anisotropy_matrix(const NodalField& gamma, const NodalField& v, double p) {
  check_shared_mesh(gamma, v, "anisotropy_matrix");
  const TriangleMesh& mesh = *v.mesh;
  const P1Geometry geom = build_geometry(mesh);
  const Eigen::VectorXd gamma_tri = vertex_average_per_triangle(geom, gamma);
  const ElementGradientField eg = element_gradients(geom, v);

  double gmax = 0.0;
  for (const auto& g : eg.value) gmax = std::max(gmax, g.norm());

  TriangleMatrixField A;
  A.value.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Eigen::Vector2d g = eg.value[t];
    const double gn = g.norm();
    if (!(gn > 1e-12 * gmax) || gmax == 0.0) {
      std::ostringstream os;
      os << "anisotropy_matrix: base field is critical on triangle " << t << " (|grad| = " << gn
         << ", scale " << gmax << ")";
      throw NoncriticalityError(os.str());
    }
    const Eigen::Matrix2d outer = (g / gn) * (g / gn).transpose();
    A.value[t] = gamma_tri[t] * std::pow(gn, p - 2.0) *
                 (Eigen::Matrix2d::Identity() + (p - 2.0) * outer);
  }
  return A;
}

NodalField solve_correction(const NodalField& gamma, const NodalField& V, const NodalField& v,
                            double p, double m) {
  check_shared_mesh(gamma, v, "solve_correction");
  check_shared_mesh(V, v, "solve_correction");
  if (V.values.minCoeff() < 0.0) throw std::invalid_argument("solve_correction: V must be nonnegative");
  const TriangleMesh& mesh = *v.mesh;
  const P1Geometry geom = build_geometry(mesh);
  const TriangleMatrixField A = anisotropy_matrix(gamma, v, p);
  const detail::SparseMat K = detail::assemble_tensor_stiffness(geom, A.value);
  const detail::DirichletIndex idx(mesh);

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (V.values[i] == 0.0) continue;
    if (v.values[i] < 0.0)
      throw std::invalid_argument("solve_correction: v must be nonnegative where V > 0");
    rhs[i] = -geom.lumped_mass[i] * V.values[i] * std::pow(v.values[i], m);
  }
  const Eigen::VectorXd zero_trace = Eigen::VectorXd::Zero(mesh.num_boundary_nodes());
  return {&mesh, detail::solve_dirichlet(K, idx, mesh, zero_trace, rhs)};
}

double p_flux_pairing(const NodalField& gamma, const NodalField& v,
                      const NodalField& omega_extension, double p) {
  check_shared_mesh(gamma, v, "p_flux_pairing");
  check_shared_mesh(omega_extension, v, "p_flux_pairing");
  const P1Geometry geom = build_geometry(*v.mesh);
  const Eigen::VectorXd gamma_tri = vertex_average_per_triangle(geom, gamma);
  const ElementGradientField gv = element_gradients(geom, v);
  const ElementGradientField go = element_gradients(geom, omega_extension);
  double total = 0.0;
  for (int t = 0; t < v.mesh->num_triangles(); ++t) {
    const double gn = gv.value[t].norm();
    if (gn == 0.0) continue;
    total += geom.area[t] * gamma_tri[t] * std::pow(gn, p - 2.0) * gv.value[t].dot(go.value[t]);
  }
  return total;
}

double correction_integral(const NodalField& gamma, const NodalField& V, const NodalField& v,
                           const NodalField& R, const NodalField& omega_extension, double p,
                           double m) {
  const P1Geometry geom = build_geometry(*v.mesh);
  const TriangleMatrixField A = anisotropy_matrix(gamma, v, p);
  const ElementGradientField gR = element_gradients(geom, R);
  const ElementGradientField go = element_gradients(geom, omega_extension);
  double total = 0.0;
  for (int t = 0; t < v.mesh->num_triangles(); ++t)
    total += geom.area[t] * go.value[t].dot(A.value[t] * gR.value[t]);
  for (int i = 0; i < v.mesh->num_nodes(); ++i) {
    if (V.values[i] == 0.0) continue;
    total += geom.lumped_mass[i] * V.values[i] * omega_extension.values[i] *
             std::pow(v.values[i], m);
  }
  return total;
}

ScalingSweep run_scaling_sweep(const SweepSpec& spec) {
  if (!spec.mesh) throw std::invalid_argument("run_scaling_sweep: missing mesh");
  if (spec.lambdas.size() < 2) throw std::invalid_argument("run_scaling_sweep: need at least two lambdas");
  for (size_t k = 0; k < spec.lambdas.size(); ++k) {
    if (!(spec.lambdas[k] > 0.0 && spec.lambdas[k] < 1.0))
      throw std::invalid_argument("run_scaling_sweep: lambdas must lie in (0,1)");
    if (k > 0 && !(spec.lambdas[k] < spec.lambdas[k - 1]))
      throw std::invalid_argument("run_scaling_sweep: lambdas must be strictly decreasing");
  }
  const bool small = spec.regime == Regime::small_data;
  if (small && !(spec.m > spec.p - 1.0))
    throw std::invalid_argument("run_scaling_sweep: small-data regime requires m > p-1");
  if (!small && !(spec.m < spec.p - 1.0))
    throw std::invalid_argument("run_scaling_sweep: large-data regime requires m < p-1");

  anisotropy_matrix(spec.gamma, spec.base, spec.p);  // noncriticality check

  EllipticProblem pr;
  pr.mesh = spec.mesh;
  pr.gamma = spec.gamma;
  pr.potential = spec.potential;
  pr.p = spec.p;
  pr.m = spec.m;
  pr.dirichlet = trace_of(spec.base);

  if (spec.verify_base) {
    EllipticProblem pharm = pr;
    pharm.potential = make_field(*spec.mesh, 0.0);
    const EllipticSolution chk = solve_from(pharm, spec.settings, spec.base);
    const double scale = std::max(1.0, spec.base.values.cwiseAbs().maxCoeff());
    const double err = (chk.w.values - spec.base.values).cwiseAbs().maxCoeff();
    if (err > 1e-8 * scale) {
      std::ostringstream os;
      os << "run_scaling_sweep: base field is not p-harmonic to solver tolerance (defect " << err
         << " vs scale " << scale << ")";
      throw std::invalid_argument(os.str());
    }
  }

  ScalingSweep sweep;
  sweep.spec = spec;
  for (double lambda : spec.lambdas) {
    EllipticProblem scaled = pr;
    const double factor = small ? lambda : 1.0 / lambda;
    scaled.dirichlet.values = factor * pr.dirichlet.values;
    EllipticSolution sol;
    try {
      sol = solve(scaled, spec.settings);
    } catch (const SolveError& e) {
      std::ostringstream os;
      os << "run_scaling_sweep: solve failed at lambda = " << lambda << ": " << e.what();
      throw SolveError(os.str());
    }
    sweep.pairings.push_back(dtn_pair(scaled, sol, spec.test, spec.extension));
    sweep.solutions.push_back(std::move(sol.w));
  }
  return sweep;
}

ExpansionFit fit_expansion(const ScalingSweep& sweep, double analytic_leading) {
  const SweepSpec& spec = sweep.spec;
  const bool small = spec.regime == Regime::small_data;
  const int n = static_cast<int>(spec.lambdas.size());
  if (n < 4) throw std::invalid_argument("fit_expansion: fit uses at least 4 lambda values");

  ExpansionFit fit;

  {  // leading term from the raw pairings
    std::vector<double> lx(n), ly(n);
    for (int k = 0; k < n; ++k) {
      lx[k] = std::log(spec.lambdas[k]);
      ly[k] = std::log(std::abs(sweep.pairings[k]));
    }
    const LineFit lf = fit_line(lx, ly);
    fit.leading_exponent_fitted = lf.slope;
    fit.leading_exponent_stderr = lf.slope_stderr;
    fit.leading_coeff = (sweep.pairings[n - 1] < 0.0 ? -1.0 : 1.0) * std::exp(lf.intercept);
  }

  const double lead_exp = small ? spec.p - 1.0 : 1.0 - spec.p;
  fit.remainders.resize(n);
  std::vector<double> lx, ly;
  for (int k = 0; k < n; ++k) {
    const double lead = analytic_leading * std::pow(spec.lambdas[k], lead_exp);
    const double rem = sweep.pairings[k] - lead;
    fit.remainders[k] = rem;
    if (std::abs(rem) < 1e3 * std::numeric_limits<double>::epsilon() * std::abs(sweep.pairings[k])) {
      fit.dropped.push_back(k);  // below the noise floor of the pairing
      continue;
    }
    lx.push_back(std::log(spec.lambdas[k]));
    ly.push_back(std::log(std::abs(rem)));
  }

  fit.direct_correction_integral = [&] {
    const NodalField R = solve_correction(spec.gamma, spec.potential, spec.base, spec.p, spec.m);
    const NodalField ext = extend_trace(*spec.mesh, spec.test, spec.extension);
    return correction_integral(spec.gamma, spec.potential, spec.base, R, ext, spec.p, spec.m);
  }();

  if (static_cast<int>(lx.size()) < 4) {
    fit.correction_detectable = false;  // no correction detectable above noise
    return fit;
  }
  const LineFit cf = fit_line(lx, ly);
  fit.correction_detectable = true;
  fit.correction_exponent_fitted = cf.slope;
  fit.correction_exponent_stderr = cf.slope_stderr;
  double sign = 0.0;
  for (int k = n - 1; k >= 0; --k) {
    if (std::find(fit.dropped.begin(), fit.dropped.end(), k) == fit.dropped.end()) {
      sign = fit.remainders[k] < 0.0 ? -1.0 : 1.0;
      break;
    }
  }
  fit.correction_coeff = sign * std::exp(cf.intercept);
  fit.residual_norm = cf.rms;
  return fit;
}

CorrectionConvergence correction_convergence(const ScalingSweep& sweep) {
  const SweepSpec& spec = sweep.spec;
  const bool small = spec.regime == Regime::small_data;
  CorrectionConvergence out;
  out.R = solve_correction(spec.gamma, spec.potential, spec.base, spec.p, spec.m);

  const P1Geometry geom = build_geometry(*spec.mesh);
  const ElementGradientField gR = element_gradients(geom, out.R);

  for (size_t k = 0; k < spec.lambdas.size(); ++k) {
    const double lambda = spec.lambdas[k];
    // small data:  w = lambda (v + lambda^{m-p+1} R_lambda)
    // large data:  w = (v + lambda^{p-1-m} R_lambda) / lambda
    const double data_scale = small ? lambda : 1.0 / lambda;
    const double ansatz_power = small ? spec.m - spec.p + 1.0 : spec.p - 1.0 - spec.m;
    NodalField R_lambda{spec.mesh,
                        (sweep.solutions[k].values / data_scale - spec.base.values) /
                            std::pow(lambda, ansatz_power)};
    out.value_err.push_back((R_lambda.values - out.R.values).cwiseAbs().maxCoeff());
    const ElementGradientField gL = element_gradients(geom, R_lambda);
    double ge = 0.0;
    for (size_t t = 0; t < gL.value.size(); ++t)
      ge = std::max(ge, (gL.value[t] - gR.value[t]).norm());
    out.grad_err.push_back(ge);
  }
  return out;
}

}  // namespace dnl
