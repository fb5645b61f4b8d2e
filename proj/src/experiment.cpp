#include "dnl/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "dnl/asymptotics.hpp"
#include "dnl/cgo.hpp"
#include "dnl/dtn.hpp"
#include "dnl/elliptic.hpp"
#include "dnl/expression.hpp"
#include "dnl/linearization.hpp"
#include "dnl/parabolic.hpp"

namespace dnl {

const char* const kVersion = "0.1.0";

namespace {

using nlohmann::json;

const std::set<std::string> kKinds = {"elliptic_solve",  "dtn_sweep",    "asymptotics",
                                      "linearize_check", "cgo_check",    "parabolic_run",
                                      "comparison_check"};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------- validation

void require_number(const json& c, const std::string& key, ValidationReport& rep,
                    bool positive = false) {
  if (!c.contains(key)) {
    rep.errors.push_back(key + ": missing required field");
    return;
  }
  if (!c[key].is_number()) {
    rep.errors.push_back(key + ": must be a number");
    return;
  }
  if (positive && !(c[key].get<double>() > 0.0)) rep.errors.push_back(key + ": must be positive");
}

// Coefficients and boundary data may be expression strings over (x1, x2) or
// plain arrays of nodal values (length checked against the mesh at run time).
void require_field_spec(const json& c, const std::string& key, ValidationReport& rep) {
  if (!c.contains(key)) {
    rep.errors.push_back(key + ": missing required field");
    return;
  }
  if (c[key].is_array()) {
    for (const auto& x : c[key]) {
      if (!x.is_number()) {
        rep.errors.push_back(key + ": nodal array must contain only numbers");
        return;
      }
    }
    return;
  }
  if (!c[key].is_string()) {
    rep.errors.push_back(key + ": must be an expression string or a nodal array");
    return;
  }
  try {
    Expression::parse(c[key].get<std::string>());
  } catch (const ExpressionError& e) {
    rep.errors.push_back(key + ": " + e.what());
  }
}

void validate_mesh_spec(const json& c, ValidationReport& rep) {
  if (!c.contains("mesh")) {
    rep.errors.push_back("mesh: missing required field");
    return;
  }
  const json& m = c["mesh"];
  if (!m.is_object()) {
    rep.errors.push_back("mesh: must be an object with \"subdivisions\" or \"file\"");
    return;
  }
  if (m.contains("subdivisions")) {
    if (!m["subdivisions"].is_number_integer() || m["subdivisions"].get<int>() < 1)
      rep.errors.push_back("mesh.subdivisions: must be a positive integer");
  } else if (m.contains("file")) {
    if (!m["file"].is_string()) rep.errors.push_back("mesh.file: must be a path string");
  } else {
    rep.errors.push_back("mesh: needs either \"subdivisions\" or \"file\"");
  }
}

void validate_exponents(const json& c, bool allow_p2, bool needs_separated_regime,
                        ValidationReport& rep) {
  require_number(c, "p", rep);
  require_number(c, "m", rep);
  if (c.contains("p") && c["p"].is_number()) {
    const double p = c["p"].get<double>();
    if (!(p > 1.0)) rep.errors.push_back("p: must exceed 1");
    if (p == 2.0 && !allow_p2)
      rep.errors.push_back(
          "p: admissible exponents are p in (1, inf) \\ {2}; pass --sanity-p2 for a p = 2 "
          "sanity run");
    if (c.contains("m") && c["m"].is_number()) {
      const double m = c["m"].get<double>();
      if (!(m > 0.0)) rep.errors.push_back("m: must be positive");
      if (needs_separated_regime && !(m > p - 1.0))
        rep.errors.push_back("m: parabolic experiments require m > p-1");
    }
  }
}

void validate_lambdas(const json& c, ValidationReport& rep) {
  if (!c.contains("lambdas")) return;  // defaulted
  const json& l = c["lambdas"];
  if (l.is_array()) {
    double prev = 1.0;
    for (const auto& x : l) {
      if (!x.is_number() || !(x.get<double>() > 0.0) || !(x.get<double>() < 1.0)) {
        rep.errors.push_back("lambdas: entries must be numbers in (0,1)");
        return;
      }
      if (!(x.get<double>() < prev)) {
        rep.errors.push_back("lambdas: entries must be strictly decreasing");
        return;
      }
      prev = x.get<double>();
    }
    if (l.size() < 4) rep.errors.push_back("lambdas: need at least 4 values for the fits");
  } else if (l.is_object()) {
    if (!l.contains("k_min") || !l.contains("k_max") || !l["k_min"].is_number_integer() ||
        !l["k_max"].is_number_integer() || l["k_min"].get<int>() < 1 ||
        l["k_max"].get<int>() < l["k_min"].get<int>() + 3)
      rep.errors.push_back("lambdas: dyadic range needs integers 1 <= k_min <= k_max - 3");
  } else {
    rep.errors.push_back("lambdas: must be an array or a {k_min, k_max} range");
  }
}

// ------------------------------------------------------------------- helpers

TriangleMesh build_mesh(const json& c) {
  const json& m = c.at("mesh");
  if (m.contains("subdivisions")) return make_unit_square_mesh(m["subdivisions"].get<int>());
  return read_mesh_file(m["file"].get<std::string>());
}

NodalField field_from(const json& c, const std::string& key, const TriangleMesh& mesh) {
  const json& spec = c.at(key);
  if (spec.is_array()) {
    if (static_cast<int>(spec.size()) != mesh.num_nodes())
      throw std::runtime_error(key + ": nodal array has " + std::to_string(spec.size()) +
                               " entries but the mesh has " + std::to_string(mesh.num_nodes()) +
                               " nodes");
    NodalField f{&mesh, Eigen::VectorXd(mesh.num_nodes())};
    for (int i = 0; i < mesh.num_nodes(); ++i) f.values[i] = spec[i].get<double>();
    return f;
  }
  const Expression e = Expression::parse(spec.get<std::string>());
  return make_field(mesh, [&e](double x, double y) { return e.eval(x, y); });
}

BoundaryTrace trace_from(const json& c, const std::string& key, const TriangleMesh& mesh) {
  const json& spec = c.at(key);
  if (spec.is_array()) {
    if (static_cast<int>(spec.size()) != mesh.num_boundary_nodes())
      throw std::runtime_error(key + ": boundary array has " + std::to_string(spec.size()) +
                               " entries but the boundary has " +
                               std::to_string(mesh.num_boundary_nodes()) + " nodes");
    BoundaryTrace g{&mesh, Eigen::VectorXd(mesh.num_boundary_nodes())};
    for (int i = 0; i < mesh.num_boundary_nodes(); ++i) g.values[i] = spec[i].get<double>();
    return g;
  }
  const Expression e = Expression::parse(spec.get<std::string>());
  return make_trace(mesh, [&e](double x, double y) { return e.eval(x, y); });
}

// Optional declared coefficient bound: mu > 1 with 1/mu <= gamma, eps <= mu.
void check_declared_bounds(const json& c, const NodalField& field, const char* name) {
  if (c.contains("mu")) check_coefficient_bounds(field, c["mu"].get<double>(), name);
}

SolverSettings settings_from(const json& c) {
  SolverSettings st;
  if (c.contains("solver")) {
    const json& s = c["solver"];
    if (s.contains("grad_tol")) st.grad_tol = s["grad_tol"].get<double>();
    if (s.contains("max_newton")) st.max_newton = s["max_newton"].get<int>();
  }
  return st;
}

std::vector<double> lambdas_from(const json& c) {
  if (!c.contains("lambdas")) {
    std::vector<double> out;
    for (int k = 3; k <= 9; ++k) out.push_back(std::pow(2.0, -k));
    return out;
  }
  const json& l = c["lambdas"];
  if (l.is_array()) return l.get<std::vector<double>>();
  std::vector<double> out;
  for (int k = l["k_min"].get<int>(); k <= l["k_max"].get<int>(); ++k)
    out.push_back(std::pow(2.0, -k));
  return out;
}

struct Writer {
  std::filesystem::path dir;
  std::vector<std::string>* files;

  void text(const std::string& name, const std::string& body) const {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
    files->push_back(path.string());
  }
  void json_file(const std::string& name, const json& j) const { text(name, j.dump(2) + "\n"); }
};

json make_manifest(const json& config, const RunOptions& opts, const std::string& kind,
                   const std::string& claim, const json& tolerance) {
  json man;
  man["experiment"] = kind;
  man["claim"] = claim;
  man["tolerance"] = tolerance;
  man["config"] = config;
  man["seed"] = opts.seed;
  man["version"] = kVersion;
  char hex[24];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a(config.dump() + "#" + std::to_string(opts.seed))));
  man["config_hash"] = hex;
  return man;
}

// ------------------------------------------------------------------- runners

void run_elliptic_solve(const json& c, const RunOptions& opts, const Writer& w) {
  const TriangleMesh mesh = build_mesh(c);
  EllipticProblem pr;
  pr.mesh = &mesh;
  pr.gamma = field_from(c, "gamma", mesh);
  check_declared_bounds(c, pr.gamma, "gamma");
  pr.potential = field_from(c, "potential", mesh);
  pr.p = c.at("p").get<double>();
  pr.m = c.at("m").get<double>();
  pr.dirichlet = trace_from(c, "dirichlet", mesh);
  const SolverSettings st = settings_from(c);

  const EllipticSolution sol = solve(pr, st);

  std::string csv = "node,x1,x2,w\n";
  for (int i = 0; i < mesh.num_nodes(); ++i)
    csv += std::to_string(i) + "," + fmt(mesh.nodes[i].x()) + "," + fmt(mesh.nodes[i].y()) + "," +
           fmt(sol.w.values[i]) + "\n";
  w.text("solution.csv", csv);

  json man = make_manifest(c, opts, "elliptic_solve",
                           "unique minimizer of the convex flux energy; boundary values bound "
                           "the solution and nonnegative data keeps it nonnegative",
                           {{"uniqueness_max_norm", 10.0 * st.grad_tol}});
  man["iterations"] = sol.iterations;
  man["achieved_grad_norm"] = sol.achieved_grad_norm;
  man["final_energy"] = sol.final_energy;
  man["max_value"] = sol.w.values.maxCoeff();
  man["min_value"] = sol.w.values.minCoeff();
  man["max_boundary_value"] = pr.dirichlet.values.maxCoeff();

  // restart from a seeded perturbed start: strict convexity makes both runs meet
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  NodalField start = harmonic_extension(mesh, pr.gamma, pr.dirichlet);
  const double scale = 1.0 + pr.dirichlet.values.cwiseAbs().maxCoeff();
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (!mesh.node_on_boundary[i]) start.values[i] += 0.1 * scale * uni(rng);
  const EllipticSolution sol2 = solve_from(pr, st, start);
  man["uniqueness_defect"] =
      (sol.w.values - sol2.w.values).cwiseAbs().maxCoeff() / std::max(1.0, sol.w.values.cwiseAbs().maxCoeff());
  w.json_file("manifest.json", man);
}

void run_dtn_sweep(const json& c, const RunOptions& opts, const Writer& w) {
  const TriangleMesh mesh = build_mesh(c);
  EllipticProblem pr;
  pr.mesh = &mesh;
  pr.gamma = field_from(c, "gamma", mesh);
  check_declared_bounds(c, pr.gamma, "gamma");
  pr.potential = field_from(c, "potential", mesh);
  pr.p = c.at("p").get<double>();
  pr.m = c.at("m").get<double>();
  pr.dirichlet = trace_from(c, "dirichlet", mesh);
  const SolverSettings st = settings_from(c);

  const EllipticSolution sol = solve(pr, st);

  std::vector<BoundaryTrace> tests;
  for (const auto& expr : c.at("tests")) {
    const Expression e = Expression::parse(expr.get<std::string>());
    tests.push_back(make_trace(mesh, [&e](double x, double y) { return e.eval(x, y); }));
  }
  const std::vector<double> zi = dtn_matrix(pr, sol, tests, Extension::zero_interior);
  const std::vector<double> ha = dtn_matrix(pr, sol, tests, Extension::harmonic);

  std::string csv = "test,pairing_zero_interior,pairing_harmonic,difference\n";
  for (size_t k = 0; k < tests.size(); ++k)
    csv += std::to_string(k) + "," + fmt(zi[k]) + "," + fmt(ha[k]) + "," + fmt(zi[k] - ha[k]) + "\n";
  w.text("pairings.csv", csv);

  json man = make_manifest(c, opts, "dtn_sweep",
                           "weak-form boundary flux pairings computed volumetrically are "
                           "independent of the interior extension of the test function",
                           {{"extension_independence_rel", 10.0 * st.grad_tol}});
  man["achieved_grad_norm"] = sol.achieved_grad_norm;
  w.json_file("manifest.json", man);
}

void run_asymptotics(const json& c, const RunOptions& opts, const Writer& w) {
  const TriangleMesh mesh = build_mesh(c);
  SweepSpec spec;
  spec.mesh = &mesh;
  spec.gamma = field_from(c, "gamma", mesh);
  check_declared_bounds(c, spec.gamma, "gamma");
  spec.potential = field_from(c, "potential", mesh);
  spec.p = c.at("p").get<double>();
  spec.m = c.at("m").get<double>();
  spec.base = field_from(c, "base", mesh);
  spec.test = trace_from(c, "omega", mesh);
  spec.lambdas = lambdas_from(c);
  spec.regime = c.at("regime").get<std::string>() == "large_data" ? Regime::large_data
                                                                  : Regime::small_data;
  spec.settings = settings_from(c);

  const ScalingSweep sweep = run_scaling_sweep(spec);
  const NodalField omega_ext = extend_trace(mesh, spec.test, spec.extension);
  const double leading = p_flux_pairing(spec.gamma, spec.base, omega_ext, spec.p);
  const ExpansionFit fit = fit_expansion(sweep, leading);
  const CorrectionConvergence conv = correction_convergence(sweep);

  std::string csv = "lambda,pairing,remainder,R_error_val,R_error_grad\n";
  for (size_t k = 0; k < spec.lambdas.size(); ++k)
    csv += fmt(spec.lambdas[k]) + "," + fmt(sweep.pairings[k]) + "," + fmt(fit.remainders[k]) +
           "," + fmt(conv.value_err[k]) + "," + fmt(conv.grad_err[k]) + "\n";
  w.text("sweep.csv", csv);

  json fj;
  fj["analytic_leading"] = leading;
  fj["leading_coeff"] = fit.leading_coeff;
  fj["leading_exponent_fitted"] = fit.leading_exponent_fitted;
  fj["leading_exponent_stderr"] = fit.leading_exponent_stderr;
  fj["correction_detectable"] = fit.correction_detectable;
  if (fit.correction_detectable) {
    fj["correction_coeff"] = fit.correction_coeff;
    fj["correction_exponent_fitted"] = fit.correction_exponent_fitted;
    fj["correction_exponent_stderr"] = fit.correction_exponent_stderr;
    fj["fit_residual_norm"] = fit.residual_norm;
  } else {
    fj["note"] = "no correction detectable above the pairing noise floor";
  }
  fj["direct_correction_integral"] = fit.direct_correction_integral;
  fj["dropped_lambdas"] = fit.dropped;
  w.json_file("fit.json", fj);

  json man = make_manifest(c, opts, "asymptotics",
                           "pairings follow leading * lambda^(+-(p-1)) with a correction "
                           "lambda^(+-m) whose coefficient equals the correction integral",
                           {{"exponent_rel", 0.05}, {"coefficient_rel", 0.05}});
  man["correction_detectable"] = fit.correction_detectable;
  w.json_file("manifest.json", man);
}

void run_linearize_check(const json& c, const RunOptions& opts, const Writer& w) {
  const TriangleMesh mesh = build_mesh(c);
  EllipticProblem pr;
  pr.mesh = &mesh;
  pr.gamma = field_from(c, "gamma", mesh);
  check_declared_bounds(c, pr.gamma, "gamma");
  pr.potential = field_from(c, "potential", mesh);
  pr.p = c.at("p").get<double>();
  pr.m = c.at("m").get<double>();
  pr.dirichlet = trace_from(c, "dirichlet", mesh);
  const SolverSettings st = settings_from(c);

  const BoundaryTrace f = trace_from(c, "f", mesh);
  const BoundaryTrace omega = trace_from(c, "omega", mesh);

  const EllipticSolution sol0 = solve(pr, st);
  const LinearizedProblem lin = linearize_at(pr, sol0);
  const double ldtn = linearized_dtn(lin, f, omega);
  const double sym_gap = std::abs(ldtn - linearized_dtn(lin, omega, f));
  const double base_pairing = dtn_pair(pr, sol0, omega);

  std::vector<double> taus = c.contains("taus") ? c["taus"].get<std::vector<double>>()
                                                : std::vector<double>{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  const double scale = pr.dirichlet.values.cwiseAbs().maxCoeff();

  std::string csv = "tau,fd_quotient,linearized,abs_error\n";
  for (double tau_rel : taus) {
    const double tau = tau_rel * scale;
    EllipticProblem bumped = pr;
    for (int k = 0; k < mesh.num_boundary_nodes(); ++k)
      bumped.dirichlet.values[k] += tau * f.values[k];
    const EllipticSolution sol_tau = solve(bumped, st);
    const double fd = (dtn_pair(bumped, sol_tau, omega) - base_pairing) / tau;
    csv += fmt(tau) + "," + fmt(fd) + "," + fmt(ldtn) + "," + fmt(std::abs(fd - ldtn)) + "\n";
  }
  w.text("linearize.csv", csv);

  json man = make_manifest(c, opts, "linearize_check",
                           "finite-difference quotients of the nonlinear pairing converge at "
                           "first order to the linearized pairing, which is symmetric",
                           {{"halving_ratio", {1.6, 2.4}}, {"symmetry_abs", 1e-10}});
  man["linearized_pairing"] = ldtn;
  man["symmetry_gap"] = sym_gap;
  w.json_file("manifest.json", man);
}

void run_cgo_check(const json& c, const RunOptions& opts, const Writer& w) {
  const int n = c.at("n").get<int>();
  const double p = c.at("p").get<double>();
  const double t = c.at("t").get<double>();
  Eigen::VectorXd xi(n);
  {
    const auto arr = c.at("xi").get<std::vector<double>>();
    for (int k = 0; k < n; ++k) xi[k] = arr[k];
  }
  const CGOFrame fr = build_frame(n, p, xi, t);

  const int nsamples = c.contains("samples") ? c["samples"].get<int>() : 8;
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Eigen::VectorXd> pts;
  for (int k = 0; k < nsamples; ++k) {
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = uni(rng);
    pts.push_back(x);
  }
  const double gamma_const = c.contains("gamma_const") ? c["gamma_const"].get<double>() : 1.0;

  json out;
  out["n"] = n;
  out["p"] = p;
  out["t"] = t;
  out["s"] = fr.s;
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  out["xi"] = vec(fr.xi);
  out["mu"] = vec(fr.mu);
  out["eta"] = vec(fr.eta);
  auto cvec = [](const Eigen::VectorXcd& v) {
    json arr = json::array();
    for (int k = 0; k < v.size(); ++k) arr.push_back({{"re", v[k].real()}, {"im", v[k].imag()}});
    return arr;
  };
  out["zeta_plus"] = cvec(fr.zeta_plus);
  out["zeta_minus"] = cvec(fr.zeta_minus);
  out["null_form_abs_plus"] = std::abs(null_form(fr, true));
  out["null_form_abs_minus"] = std::abs(null_form(fr, false));
  out["plane_wave_residual"] = plane_wave_residual(gamma_const, fr, pts);
  w.json_file("cgo.json", out);

  json man = make_manifest(c, opts, "cgo_check",
                           "the stretched symbol vanishes on the constructed frame, so the "
                           "constant-weight plane wave solves the stretched equation exactly",
                           {{"null_form_rel", 1e-13}});
  man["null_form_abs_plus"] = out["null_form_abs_plus"];
  w.json_file("manifest.json", man);
}

void run_parabolic_run(const json& c, const RunOptions& opts, const Writer& w) {
  const TriangleMesh mesh = build_mesh(c);
  ParabolicProblem pr;
  pr.mesh = &mesh;
  pr.gamma = field_from(c, "gamma", mesh);
  check_declared_bounds(c, pr.gamma, "gamma");
  pr.epsilon = field_from(c, "epsilon", mesh);
  check_declared_bounds(c, pr.epsilon, "epsilon");
  pr.p = c.at("p").get<double>();
  pr.m = c.at("m").get<double>();
  pr.T = c.contains("T") ? c["T"].get<double>() : 1.0;
  const BoundaryTrace g = trace_from(c, "g", mesh);
  const double alpha = alpha_exponent(pr.m, pr.p);
  pr.lateral = separated_lateral(g, alpha);
  const SolverSettings st = settings_from(c);

  const TimeGrid grid{c.contains("steps") ? c["steps"].get<int>() : 16, pr.T};
  const std::vector<NodalField> snaps = step_implicit(pr, grid, st);

  for (int k = 0; k <= grid.steps; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03d.csv", k);
    std::string csv = "node,value\n";
    for (int i = 0; i < mesh.num_nodes(); ++i)
      csv += std::to_string(i) + "," + fmt(snaps[k].values[i]) + "\n";
    w.text(name, csv);
  }

  const SeparatedSolution sep = separated_solution(pr, g, st);
  const NodalField ref = sep.at_time(pr.T);
  const P1Geometry geom = build_geometry(mesh);
  double l2 = 0.0;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double d = snaps.back().values[i] - ref.values[i];
    l2 += geom.lumped_mass[i] * d * d;
  }

  json man = make_manifest(c, opts, "parabolic_run",
                           "implicit Euler runs with separated lateral data converge at first "
                           "order in dt to the closed-form separated solution",
                           {{"l2_self_convergence_order", 1.0}});
  man["times"] = [&] {
    std::vector<double> ts;
    for (int k = 0; k <= grid.steps; ++k) ts.push_back(grid.time(k));
    return ts;
  }();
  man["alpha"] = alpha;
  man["flux_exponent"] = sep.flux_exponent;
  man["l2_error_final_vs_separated"] = std::sqrt(l2);
  man["dt"] = grid.dt();
  w.json_file("manifest.json", man);

  if (c.contains("times") && c.contains("tests")) {
    std::vector<BoundaryTrace> tests;
    for (const auto& expr : c["tests"]) {
      const Expression e = Expression::parse(expr.get<std::string>());
      tests.push_back(make_trace(mesh, [&e](double x, double y) { return e.eval(x, y); }));
    }
    const LateralRecord rec =
        lateral_cauchy_record(pr, g, tests, c["times"].get<std::vector<double>>(), st);
    std::string csv = "time";
    for (size_t h = 0; h < tests.size(); ++h) csv += ",pairing_" + std::to_string(h);
    csv += "\n";
    for (size_t ti = 0; ti < rec.times.size(); ++ti) {
      csv += fmt(rec.times[ti]);
      for (Eigen::Index h = 0; h < rec.pairings.cols(); ++h)
        csv += "," + fmt(rec.pairings(static_cast<Eigen::Index>(ti), h));
      csv += "\n";
    }
    w.text("lateral.csv", csv);
  }
}

void run_comparison_check(const json& c, const RunOptions& opts, const Writer& w) {
  const TriangleMesh mesh = build_mesh(c);
  ParabolicProblem pr;
  pr.mesh = &mesh;
  pr.gamma = field_from(c, "gamma", mesh);
  check_declared_bounds(c, pr.gamma, "gamma");
  pr.epsilon = field_from(c, "epsilon", mesh);
  check_declared_bounds(c, pr.epsilon, "epsilon");
  pr.p = c.at("p").get<double>();
  pr.m = c.at("m").get<double>();
  pr.T = c.contains("T") ? c["T"].get<double>() : 1.0;
  const SolverSettings st = settings_from(c);

  const BoundaryTrace g1 = trace_from(c, "g1", mesh);
  const BoundaryTrace g2 = trace_from(c, "g2", mesh);
  for (int k = 0; k < mesh.num_boundary_nodes(); ++k)
    if (g1.values[k] > g2.values[k])
      throw std::runtime_error("comparison_check: g1 must not exceed g2 on the boundary");

  const double alpha = alpha_exponent(pr.m, pr.p);
  const TimeGrid grid{c.contains("steps") ? c["steps"].get<int>() : 16, pr.T};

  ParabolicProblem pr1 = pr;
  pr1.lateral = separated_lateral(g1, alpha);
  ParabolicProblem pr2 = pr;
  pr2.lateral = separated_lateral(g2, alpha);
  const auto run1 = step_implicit(pr1, grid, st);
  const auto run2 = step_implicit(pr2, grid, st);
  const std::vector<double> defect = comparison_defect(run1, run2, pr.epsilon, pr.m);

  double scale = 0.0;
  for (const auto& s : run2) scale = std::max(scale, s.values.cwiseAbs().maxCoeff());
  const double tol = 1e-8 * std::max(scale, 1.0);
  bool monotone = true;
  for (size_t k = 1; k < defect.size(); ++k)
    if (defect[k] > defect[k - 1] + tol) monotone = false;

  std::string csv = "time,defect\n";
  for (size_t k = 0; k < defect.size(); ++k)
    csv += fmt(grid.time(static_cast<int>(k))) + "," + fmt(defect[k]) + "\n";
  w.text("defect.csv", csv);

  json man = make_manifest(c, opts, "comparison_check",
                           "with ordered lateral data the positive-part defect integral is "
                           "nonincreasing in time",
                           {{"nonincreasing_abs", tol}});
  man["monotone"] = monotone;
  w.json_file("manifest.json", man);
  if (!monotone) throw std::runtime_error("comparison_check: defect sequence increased beyond tolerance");
}

}  // namespace

ValidationReport validate_config(const json& c, bool allow_p2) {
  ValidationReport rep;
  if (!c.is_object()) {
    rep.errors.push_back("config: must be a JSON object");
    return rep;
  }
  if (!c.contains("kind") || !c["kind"].is_string()) {
    rep.errors.push_back("kind: missing or not a string");
    return rep;
  }
  const std::string kind = c["kind"].get<std::string>();
  if (!kKinds.count(kind)) {
    rep.errors.push_back("kind: unknown experiment kind \"" + kind + "\"");
    return rep;
  }

  if (kind == "cgo_check") {
    require_number(c, "p", rep);
    if (c.contains("p") && c["p"].is_number() && c["p"].get<double>() == 2.0 && !allow_p2)
      rep.errors.push_back(
          "p: admissible exponents are p in (1, inf) \\ {2}; pass --sanity-p2 for a p = 2 "
          "sanity run");
    require_number(c, "t", rep, /*positive=*/true);
    if (!c.contains("n") || !c["n"].is_number_integer() || c["n"].get<int>() < 3)
      rep.errors.push_back("n: must be an integer >= 3");
    if (!c.contains("xi") || !c["xi"].is_array())
      rep.errors.push_back("xi: must be an array of n numbers");
    else if (c.contains("n") && c["n"].is_number_integer() &&
             c["xi"].size() != static_cast<size_t>(c["n"].get<int>()))
      rep.errors.push_back("xi: length must equal n");
    return rep;
  }

  const bool parabolic_kind = kind == "parabolic_run" || kind == "comparison_check";
  validate_mesh_spec(c, rep);
  validate_exponents(c, allow_p2, parabolic_kind, rep);
  if (c.contains("mu") && (!c["mu"].is_number() || !(c["mu"].get<double>() > 1.0)))
    rep.errors.push_back("mu: declared coefficient bound must be a number exceeding 1");
  require_field_spec(c, "gamma", rep);

  if (kind == "elliptic_solve" || kind == "dtn_sweep" || kind == "linearize_check") {
    require_field_spec(c, "potential", rep);
    require_field_spec(c, "dirichlet", rep);
  }
  if (kind == "dtn_sweep") {
    if (!c.contains("tests") || !c["tests"].is_array() || c["tests"].empty())
      rep.errors.push_back("tests: must be a nonempty array of expression strings");
  }
  if (kind == "asymptotics") {
    require_field_spec(c, "potential", rep);
    require_field_spec(c, "base", rep);
    require_field_spec(c, "omega", rep);
    validate_lambdas(c, rep);
    if (!c.contains("regime") || !c["regime"].is_string() ||
        (c["regime"] != "small_data" && c["regime"] != "large_data"))
      rep.errors.push_back("regime: must be \"small_data\" or \"large_data\"");
    else if (c.contains("p") && c["p"].is_number() && c.contains("m") && c["m"].is_number()) {
      const double p = c["p"].get<double>(), m = c["m"].get<double>();
      if (c["regime"] == "small_data" && !(m > p - 1.0))
        rep.errors.push_back("regime: small_data requires m > p-1");
      if (c["regime"] == "large_data" && !(m < p - 1.0))
        rep.errors.push_back("regime: large_data requires m < p-1");
    }
  }
  if (kind == "linearize_check") {
    require_field_spec(c, "f", rep);
    require_field_spec(c, "omega", rep);
  }
  if (kind == "parabolic_run") {
    require_field_spec(c, "epsilon", rep);
    require_field_spec(c, "g", rep);
  }
  if (kind == "comparison_check") {
    require_field_spec(c, "epsilon", rep);
    require_field_spec(c, "g1", rep);
    require_field_spec(c, "g2", rep);
  }
  return rep;
}

ExperimentResult run_experiment(const json& config, const RunOptions& opts) {
  ExperimentResult res;
  const ValidationReport rep = validate_config(config, opts.sanity_p2);
  if (!rep.ok()) {
    res.exit_code = 2;
    res.message = "config error:";
    for (const auto& e : rep.errors) res.message += "\n  " + e;
    return res;
  }
  try {
    std::filesystem::create_directories(opts.out_dir);
    Writer w{opts.out_dir, &res.files};
    const std::string kind = config["kind"].get<std::string>();
    if (kind == "elliptic_solve") run_elliptic_solve(config, opts, w);
    else if (kind == "dtn_sweep") run_dtn_sweep(config, opts, w);
    else if (kind == "asymptotics") run_asymptotics(config, opts, w);
    else if (kind == "linearize_check") run_linearize_check(config, opts, w);
    else if (kind == "cgo_check") run_cgo_check(config, opts, w);
    else if (kind == "parabolic_run") run_parabolic_run(config, opts, w);
    else run_comparison_check(config, opts, w);
  } catch (const std::exception& e) {
    res.exit_code = 1;
    res.message = std::string("experiment failed: ") + e.what();
  }
  return res;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config file " + path + " is not valid JSON: " + e.what());
  }
}

}  // namespace dnl
