#pragma once
// Scaling asymptotics of the nonlinear boundary flux map: anisotropy tensor
// of the p-flux at a noncritical base field, the linear correction equation,
// scaling sweeps of the nonlinear pairing, and log-log exponent fits that
// separate the leading p-flux term from the absorption correction.

#include <vector>

#include "dnl/dtn.hpp"
#include "dnl/elliptic.hpp"

namespace dnl {

struct NoncriticalityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-triangle  A[v] = gamma |grad v|^{p-2} (I + (p-2) grad v (x) grad v / |grad v|^2).
// Throws NoncriticalityError when some |grad v| falls below 1e-12 of the
// largest element gradient.
TriangleMatrixField anisotropy_matrix(const NodalField& gamma, const NodalField& v, double p);

// P1 solution of  div(A[v] grad R) = V v^m  with R = 0 on the boundary.
NodalField solve_correction(const NodalField& gamma, const NodalField& V, const NodalField& v,
                            double p, double m);

/// Leading-term integral  int gamma |grad v|^{p-2} grad v . grad omega_ext
/// by the same element quadrature used everywhere else.
double p_flux_pairing(const NodalField& gamma, const NodalField& v,
                      const NodalField& omega_extension, double p);

/// Correction integral  int (grad omega_ext . A[v] grad R + V omega_ext v^m).
double correction_integral(const NodalField& gamma, const NodalField& V, const NodalField& v,
                           const NodalField& R, const NodalField& omega_extension, double p,
                           double m);

enum class Regime { small_data, large_data };

struct SweepSpec {
  const TriangleMesh* mesh = nullptr;
  NodalField gamma;
  NodalField potential;  // V
  double p = 3.0;
  double m = 4.0;
  NodalField base;       // noncritical p-harmonic field v
  BoundaryTrace test;    // omega
  std::vector<double> lambdas;  // decreasing, in (0,1)
  Regime regime = Regime::small_data;
  Extension extension = Extension::zero_interior;
  SolverSettings settings;
  bool verify_base = true;  // check that base solves the V = 0 problem
};

struct ScalingSweep {
  SweepSpec spec;
  std::vector<double> pairings;          // one per lambda
  std::vector<NodalField> solutions;     // nonlinear solutions w_lambda
};

// Solves the nonlinear problem with data lambda * base (small-data regime) or
// base / lambda (large-data regime) for every lambda and records the pairing
// against the test trace.  Throws on regime/exponent mismatch, noncritical
// violations, or a base field that is not p-harmonic to solver tolerance.
ScalingSweep run_scaling_sweep(const SweepSpec&);

struct ExpansionFit {
  double leading_coeff = 0.0;
  double leading_exponent_fitted = 0.0;
  double leading_exponent_stderr = 0.0;
  double correction_coeff = 0.0;
  double correction_exponent_fitted = 0.0;
  double correction_exponent_stderr = 0.0;
  double residual_norm = 0.0;               // RMS of the log-log fit residuals
  double direct_correction_integral = 0.0;  // via solve_correction
  bool correction_detectable = false;
  std::vector<int> dropped;                 // lambda indices below the noise floor
  std::vector<double> remainders;           // pairing minus analytic leading term
};

// analytic_leading is the quadrature value of the leading integral for the
// sweep's base and test (see p_flux_pairing); the remainder after removing
// analytic_leading * lambda^{+-(p-1)} is fitted as coeff * lambda^e.
ExpansionFit fit_expansion(const ScalingSweep&, double analytic_leading);

struct CorrectionConvergence {
  NodalField R;                   // solution of the correction equation
  std::vector<double> value_err;  // max-norm of R_lambda - R per lambda
  std::vector<double> grad_err;   // max element-gradient norm per lambda
};

// Extracts R_lambda from each sweep solution through the scaling ansatz and
// measures its distance to the correction field R.
CorrectionConvergence correction_convergence(const ScalingSweep&);

}  // namespace dnl
