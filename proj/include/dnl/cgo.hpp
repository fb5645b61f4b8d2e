#pragma once
// Complex exponential frames for the stretched operator div((I + (p-2) e_n(x)e_n) grad .):
// vectors zeta = +-s mu + i(xi +- t eta) built so that the stretched symbol
// zeta . (I + (p-2) e_n(x)e_n) zeta vanishes, plus the exact plane-wave check
// for a constant weight.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace dnl {

struct CGOFrame {
  int n = 3;          // ambient dimension, >= 3
  double p = 3.0;     // exponent of the flux nonlinearity
  Eigen::VectorXd xi;
  Eigen::VectorXd eta;  // unit, orthogonal to xi, mu and e_n
  Eigen::VectorXd mu;   // unit, in span{xi, e_n}, stretched-orthogonal to xi
  double t = 0.0;       // free parameter > 0
  double s = 0.0;       // modulus fixed by the null condition
  Eigen::VectorXcd zeta_plus;
  Eigen::VectorXcd zeta_minus;
};

// Builds the frame for given (n, p, xi, t).  mu is the solution of
//   mu . xi + (p-2)(mu.e_n)(xi.e_n) = 0
// in span{xi, e_n} with mu.e_n >= 0 (and mu.xi >= 0 when mu.e_n = 0);
// eta = normalized e_n x xi for n = 3, else the first standard basis
// direction surviving Gram-Schmidt against {xi, mu, e_n}.  Throws
// std::invalid_argument for n < 3, xi = 0, xi parallel to e_n, or t <= 0.
CGOFrame build_frame(int n, double p, const Eigen::VectorXd& xi, double t);

/// Stretched symbol  zeta . (I + (p-2) e_n(x)e_n) zeta  of one of the pair.
std::complex<double> null_form(const CGOFrame&, bool plus);

// For constant gamma the field  gamma^{-1/2} exp(zeta.x)  solves the
// stretched equation exactly; returns the max modulus of the analytic
// residual  gamma^{1/2} (zeta.B zeta) exp(zeta.x)  over the sample points.
double plane_wave_residual(double gamma_const, const CGOFrame&,
                           const std::vector<Eigen::VectorXd>& sample_points, bool plus = true);

}  // namespace dnl
