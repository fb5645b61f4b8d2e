#include "dnl/elliptic.hpp"

#include <cmath>
#include <cstring>

#include "newton_core.hpp"

namespace dnl {

namespace {

void check_field_shapes(const EllipticProblem& pr) {
  if (!pr.mesh) throw std::invalid_argument("EllipticProblem: missing mesh");
  const int nv = pr.mesh->num_nodes();
  const int nb = pr.mesh->num_boundary_nodes();
  if (pr.gamma.mesh != pr.mesh || pr.gamma.values.size() != nv)
    throw std::invalid_argument("EllipticProblem: gamma does not match mesh");
  if (pr.potential.mesh != pr.mesh || pr.potential.values.size() != nv)
    throw std::invalid_argument("EllipticProblem: potential does not match mesh");
  if (pr.dirichlet.mesh != pr.mesh || pr.dirichlet.values.size() != nb)
    throw std::invalid_argument("EllipticProblem: dirichlet data does not match boundary");
}

bool absorption_active(const EllipticProblem& pr) { return pr.potential.values.maxCoeff() > 0.0; }

detail::SeparableTerm make_zeroth(const EllipticProblem& pr, const P1Geometry& geom) {
  detail::SeparableTerm z;
  z.c_pow = geom.lumped_mass.cwiseProduct(pr.potential.values);
  z.c_lin = Eigen::VectorXd::Zero(pr.mesh->num_nodes());
  z.mexp = pr.m;
  const double gmax = pr.dirichlet.values.size() ? pr.dirichlet.values.cwiseAbs().maxCoeff() : 0.0;
  z.hess_clamp = 1e-8 * (gmax > 0.0 ? gmax : 1.0);
  return z;
}

void impose_dirichlet(const TriangleMesh& mesh, const BoundaryTrace& g, Eigen::VectorXd& v) {
  for (int k = 0; k < mesh.num_boundary_nodes(); ++k) v[mesh.boundary_nodes[k]] = g.values[k];
}

void require_matching_trace(const EllipticProblem& pr, const NodalField& v) {
  if (v.mesh != pr.mesh || v.values.size() != pr.mesh->num_nodes())
    throw std::invalid_argument("field does not match the problem mesh");
  const double scale = 1.0 + pr.dirichlet.values.cwiseAbs().maxCoeff();
  for (int k = 0; k < pr.mesh->num_boundary_nodes(); ++k) {
    if (std::abs(v.values[pr.mesh->boundary_nodes[k]] - pr.dirichlet.values[k]) > 1e-10 * scale)
      throw std::invalid_argument("field does not match the Dirichlet data on the boundary");
  }
}

}  // namespace

void validate(const EllipticProblem& pr) {
  check_field_shapes(pr);
  if (!(pr.p > 1.0) || !std::isfinite(pr.p)) throw std::invalid_argument("EllipticProblem: p must lie in (1, inf)");
  if (!(pr.m > 0.0) || !std::isfinite(pr.m)) throw std::invalid_argument("EllipticProblem: m must be positive");
  if (pr.gamma.values.minCoeff() <= 0.0) throw std::invalid_argument("EllipticProblem: gamma must be strictly positive");
  const double vmin = pr.potential.values.minCoeff();
  if (vmin < 0.0) throw std::invalid_argument("EllipticProblem: V must be nonnegative");
  if (absorption_active(pr)) {
    if (vmin <= 0.0)
      throw std::invalid_argument("EllipticProblem: V must be strictly positive when absorption is active");
    if (pr.dirichlet.values.minCoeff() < 0.0)
      throw std::invalid_argument("EllipticProblem: boundary data must be nonnegative when V > 0");
  }
  for (int k = 0; k < pr.dirichlet.values.size(); ++k)
    if (!std::isfinite(pr.dirichlet.values[k]))
      throw std::invalid_argument("EllipticProblem: non-finite boundary data");
}

std::uint64_t problem_fingerprint(const EllipticProblem& pr) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mix = [&h](const void* data, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  auto mix_vec = [&](const Eigen::VectorXd& v) { mix(v.data(), sizeof(double) * v.size()); };
  const auto nv = static_cast<std::int64_t>(pr.mesh ? pr.mesh->num_nodes() : 0);
  mix(&nv, sizeof nv);
  mix(&pr.p, sizeof pr.p);
  mix(&pr.m, sizeof pr.m);
  mix_vec(pr.gamma.values);
  mix_vec(pr.potential.values);
  mix_vec(pr.dirichlet.values);
  return h;
}

double energy(const EllipticProblem& pr, const NodalField& v, double delta) {
  validate(pr);
  require_matching_trace(pr, v);
  const P1Geometry geom = build_geometry(*pr.mesh);
  const Eigen::VectorXd gamma_tri = vertex_average_per_triangle(geom, pr.gamma);
  return detail::energy_value(geom, gamma_tri, pr.p, make_zeroth(pr, geom), v.values, delta);
}

NodalField energy_gradient(const EllipticProblem& pr, const NodalField& v, double delta) {
  validate(pr);
  require_matching_trace(pr, v);
  const P1Geometry geom = build_geometry(*pr.mesh);
  const Eigen::VectorXd gamma_tri = vertex_average_per_triangle(geom, pr.gamma);
  NodalField grad{pr.mesh, Eigen::VectorXd()};
  double floor_est = 0.0;
  detail::residual(geom, gamma_tri, pr.p, make_zeroth(pr, geom), v.values, delta, grad.values,
                   floor_est);
  return grad;
}

NodalField harmonic_extension(const TriangleMesh& mesh, const NodalField& gamma,
                              const BoundaryTrace& g) {
  const P1Geometry geom = build_geometry(mesh);
  const Eigen::VectorXd gamma_tri = vertex_average_per_triangle(geom, gamma);
  const detail::SparseMat K = detail::assemble_isotropic_stiffness(geom, gamma_tri);
  const detail::DirichletIndex idx(mesh);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(mesh.num_nodes());
  return {&mesh, detail::solve_dirichlet(K, idx, mesh, g.values, zero)};
}

EllipticSolution solve_from(const EllipticProblem& pr, const SolverSettings& st,
                            const NodalField& start) {
  validate(pr);
  if (start.mesh != pr.mesh || start.values.size() != pr.mesh->num_nodes())
    throw std::invalid_argument("solve_from: start field does not match mesh");
  const P1Geometry geom = build_geometry(*pr.mesh);
  const Eigen::VectorXd gamma_tri = vertex_average_per_triangle(geom, pr.gamma);

  Eigen::VectorXd v = start.values;
  impose_dirichlet(*pr.mesh, pr.dirichlet, v);
  const detail::NewtonReport rep =
      detail::minimize(geom, gamma_tri, pr.p, make_zeroth(pr, geom), st, v);

  EllipticSolution sol;
  sol.w = {pr.mesh, std::move(v)};
  sol.final_energy = rep.final_energy;
  sol.iterations = rep.iterations;
  sol.achieved_grad_norm =
      rep.initial_grad_norm > 0.0 ? rep.final_grad_norm / rep.initial_grad_norm : 0.0;
  sol.delta_floor = rep.delta_floor;
  sol.problem_tag = problem_fingerprint(pr);
  return sol;
}

EllipticSolution solve(const EllipticProblem& pr, const SolverSettings& st) {
  validate(pr);
  return solve_from(pr, st, harmonic_extension(*pr.mesh, pr.gamma, pr.dirichlet));
}

std::vector<Eigen::Vector2d> flux_field(const EllipticProblem& pr, const NodalField& w,
                                        double delta) {
  validate(pr);
  const P1Geometry geom = build_geometry(*pr.mesh);
  const Eigen::VectorXd gamma_tri = vertex_average_per_triangle(geom, pr.gamma);
  const ElementGradientField eg = element_gradients(geom, w);
  std::vector<Eigen::Vector2d> flux(eg.value.size());
  for (size_t t = 0; t < eg.value.size(); ++t) {
    const double s = eg.value[t].squaredNorm() + delta * delta;
    flux[t] = s == 0.0 ? Eigen::Vector2d::Zero().eval()
                       : (gamma_tri[t] * std::pow(s, 0.5 * (pr.p - 2.0)) * eg.value[t]).eval();
  }
  return flux;
}

std::vector<Eigen::Vector2d> flux_field(const EllipticProblem& pr, const EllipticSolution& sol) {
  return flux_field(pr, sol.w, sol.delta_floor);
}

}  // namespace dnl
