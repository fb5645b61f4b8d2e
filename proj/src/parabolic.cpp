#include "dnl/parabolic.hpp"

#include <cmath>
#include <sstream>

#include "newton_core.hpp"

namespace dnl {

double alpha_exponent(double m, double p) {
  if (!(m > p - 1.0))
    throw std::domain_error("alpha_exponent: requires m > p-1 (got m = " + std::to_string(m) +
                            ", p = " + std::to_string(p) + ")");
  return 1.0 / (m - p + 1.0);
}

NodalField potential_from_epsilon(const NodalField& eps, double m, double p) {
  const double a = alpha_exponent(m, p);
  return {eps.mesh, m * a * eps.values};
}

std::function<BoundaryTrace(double)> separated_lateral(const BoundaryTrace& g, double alpha) {
  return [g, alpha](double t) {
    BoundaryTrace out = g;
    out.values = std::pow(t, alpha) * g.values;
    return out;
  };
}

namespace {

void validate_parabolic(const ParabolicProblem& pr) {
  if (!pr.mesh) throw std::invalid_argument("ParabolicProblem: missing mesh");
  if (pr.epsilon.mesh != pr.mesh || pr.gamma.mesh != pr.mesh)
    throw std::invalid_argument("ParabolicProblem: coefficient fields do not match mesh");
  if (pr.epsilon.values.minCoeff() <= 0.0 || pr.gamma.values.minCoeff() <= 0.0)
    throw std::invalid_argument("ParabolicProblem: eps and gamma must be strictly positive");
  if (!(pr.p > 1.0) || !(pr.m > 0.0)) throw std::invalid_argument("ParabolicProblem: need p > 1, m > 0");
  if (!(pr.T > 0.0)) throw std::invalid_argument("ParabolicProblem: need T > 0");
}

}  // namespace

EllipticProblem elliptic_reduction(const ParabolicProblem& pr, const BoundaryTrace& g) {
  validate_parabolic(pr);
  EllipticProblem ep;
  ep.mesh = pr.mesh;
  ep.gamma = pr.gamma;
  ep.potential = potential_from_epsilon(pr.epsilon, pr.m, pr.p);
  ep.p = pr.p;
  ep.m = pr.m;
  ep.dirichlet = g;
  return ep;
}

NodalField SeparatedSolution::at_time(double t) const {
  return {w.mesh, std::pow(t, alpha) * w.values};
}

std::vector<Eigen::Vector2d> SeparatedSolution::flux_at_time(const EllipticProblem& pr,
                                                             double t) const {
  std::vector<Eigen::Vector2d> fx = flux_field(pr, elliptic);
  const double factor = std::pow(t, flux_exponent);
  for (auto& f : fx) f *= factor;
  return fx;
}

SeparatedSolution separated_solution(const ParabolicProblem& pr, const BoundaryTrace& g,
                                     const SolverSettings& st) {
  if (g.mesh != pr.mesh) throw std::invalid_argument("separated_solution: trace mesh mismatch");
  if (g.values.minCoeff() <= 0.0)
    throw std::invalid_argument("separated_solution: boundary data must be strictly positive");
  const EllipticProblem ep = elliptic_reduction(pr, g);
  SeparatedSolution out;
  out.alpha = alpha_exponent(pr.m, pr.p);
  out.flux_exponent = out.alpha * (pr.p - 1.0);
  out.elliptic = solve(ep, st);
  out.w = out.elliptic.w;
  return out;
}

std::vector<NodalField> step_implicit(const ParabolicProblem& pr, const TimeGrid& grid,
                                      const SolverSettings& st) {
  validate_parabolic(pr);
  if (grid.steps < 1 || grid.T <= 0.0) throw std::invalid_argument("step_implicit: invalid time grid");
  if (!pr.lateral) throw std::invalid_argument("step_implicit: missing lateral data");

  const TriangleMesh& mesh = *pr.mesh;
  const P1Geometry geom = build_geometry(mesh);
  const Eigen::VectorXd gamma_tri = vertex_average_per_triangle(geom, pr.gamma);
  const Eigen::VectorXd eps_lumped = geom.lumped_mass.cwiseProduct(pr.epsilon.values);
  const double dt = grid.dt();

  std::vector<NodalField> snapshots;
  snapshots.reserve(grid.steps + 1);
  snapshots.push_back(make_field(mesh, 0.0));  // zero initial state

  Eigen::VectorXd u_prev = snapshots.front().values;
  for (int k = 1; k <= grid.steps; ++k) {
    const double tk = grid.time(k);
    const BoundaryTrace gk = pr.lateral(tk);
    if (gk.mesh != pr.mesh || gk.values.size() != mesh.num_boundary_nodes())
      throw std::invalid_argument("step_implicit: lateral data does not match boundary");
    if (gk.values.minCoeff() < 0.0)
      throw std::invalid_argument("step_implicit: lateral data must be nonnegative");

    detail::SeparableTerm z;
    z.mexp = pr.m;
    z.c_pow = eps_lumped / dt;
    z.c_lin.resize(mesh.num_nodes());
    for (int i = 0; i < mesh.num_nodes(); ++i)
      z.c_lin[i] = -eps_lumped[i] / dt * std::pow(std::max(u_prev[i], 0.0), pr.m);
    const double scale =
        std::max({gk.values.maxCoeff(), u_prev.maxCoeff(), 0.0});
    z.hess_clamp = 1e-8 * (scale > 0.0 ? scale : 1.0);

    Eigen::VectorXd v = u_prev;  // warm start from the previous snapshot
    for (int b = 0; b < mesh.num_boundary_nodes(); ++b) v[mesh.boundary_nodes[b]] = gk.values[b];
    try {
      detail::minimize(geom, gamma_tri, pr.p, z, st, v);
    } catch (const SolveError& e) {
      std::ostringstream os;
      os << "step_implicit: step " << k << " of " << grid.steps << " (t = " << tk
         << ") failed: " << e.what();
      throw SolveError(os.str());
    }
    u_prev = v;
    snapshots.push_back({&mesh, std::move(v)});
  }
  return snapshots;
}

std::vector<double> comparison_defect(const std::vector<NodalField>& run1,
                                      const std::vector<NodalField>& run2,
                                      const NodalField& epsilon, double m) {
  if (run1.size() != run2.size() || run1.empty())
    throw std::invalid_argument("comparison_defect: runs have different lengths");
  const TriangleMesh* mesh = epsilon.mesh;
  for (size_t k = 0; k < run1.size(); ++k)
    if (run1[k].mesh != mesh || run2[k].mesh != mesh)
      throw std::invalid_argument("comparison_defect: runs do not share the mesh");

  const P1Geometry geom = build_geometry(*mesh);
  std::vector<double> defect(run1.size(), 0.0);
  for (size_t k = 0; k < run1.size(); ++k) {
    double total = 0.0;
    for (int i = 0; i < mesh->num_nodes(); ++i) {
      const double a = std::pow(std::max(run1[k].values[i], 0.0), m);
      const double b = std::pow(std::max(run2[k].values[i], 0.0), m);
      total += geom.lumped_mass[i] * epsilon.values[i] * std::max(a - b, 0.0);
    }
    defect[k] = total;
  }
  return defect;
}

LateralRecord lateral_cauchy_record(const ParabolicProblem& pr, const BoundaryTrace& g,
                                    const std::vector<BoundaryTrace>& tests,
                                    const std::vector<double>& times, const SolverSettings& st) {
  for (double t : times)
    if (t < 0.0) throw std::invalid_argument("lateral_cauchy_record: times must be nonnegative");

  LateralRecord rec;
  rec.separated = separated_solution(pr, g, st);
  rec.flux_exponent = rec.separated.flux_exponent;
  rec.times.assign(times.begin(), times.end());
  rec.pairings.resize(static_cast<Eigen::Index>(times.size()),
                      static_cast<Eigen::Index>(tests.size()));

  const EllipticProblem ep = elliptic_reduction(pr, g);
  const TriangleMesh& mesh = *pr.mesh;
  const P1Geometry geom = build_geometry(mesh);
  const double alpha = rec.separated.alpha;
  const double am = alpha * pr.m;

  for (size_t ti = 0; ti < times.size(); ++ti) {
    const double t = times[ti];
    if (t == 0.0) {  // flux and mass term vanish at t = 0 since alpha(p-1) > 0
      rec.pairings.row(static_cast<Eigen::Index>(ti)).setZero();
      continue;
    }
    // assemble the pairing from the snapshot field u(t) itself; the time
    // factorization is then observed, not inserted
    const NodalField u_t = rec.separated.at_time(t);
    const double delta_t = std::pow(t, alpha) * rec.separated.elliptic.delta_floor;
    const std::vector<Eigen::Vector2d> flux = flux_field(ep, u_t, delta_t);
    for (size_t hi = 0; hi < tests.size(); ++hi) {
      const NodalField ext = extend_trace(mesh, tests[hi], Extension::zero_interior);
      const ElementGradientField go = element_gradients(geom, ext);
      double value = 0.0;
      for (int tr = 0; tr < mesh.num_triangles(); ++tr)
        value += geom.area[tr] * flux[tr].dot(go.value[tr]);
      // eps d/dt(u^m) = (alpha m / t) eps u^m evaluated on the snapshot
      for (int i = 0; i < mesh.num_nodes(); ++i)
        value += geom.lumped_mass[i] * (am / t) * pr.epsilon.values[i] *
                 std::pow(std::max(u_t.values[i], 0.0), pr.m) * ext.values[i];
      rec.pairings(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(hi)) = value;
    }
  }
  return rec;
}

}  // namespace dnl
