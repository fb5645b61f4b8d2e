#include "dnl/cgo.hpp"

#include <cmath>
#include <stdexcept>

namespace dnl {

namespace {

std::complex<double> stretched_symbol(const Eigen::VectorXcd& z, double p, int n) {
  std::complex<double> q(0.0, 0.0);
  for (int k = 0; k < n; ++k) q += z[k] * z[k];
  const std::complex<double> zn = z[n - 1];
  return q + (p - 2.0) * zn * zn;
}

}  // namespace

CGOFrame build_frame(int n, double p, const Eigen::VectorXd& xi, double t) {
  if (n < 3) throw std::invalid_argument("build_frame: dimension must be at least 3");
  if (xi.size() != n) throw std::invalid_argument("build_frame: xi has wrong dimension");
  if (!(t > 0.0)) throw std::invalid_argument("build_frame: t must be positive");
  if (!(p > 1.0)) throw std::invalid_argument("build_frame: p must exceed 1");

  const double xi_n = xi[n - 1];
  Eigen::VectorXd xi_perp = xi;
  xi_perp[n - 1] = 0.0;
  const double perp_norm = xi_perp.norm();
  if (xi.norm() == 0.0 || perp_norm == 0.0)
    throw std::invalid_argument("build_frame: xi must be nonzero and not parallel to e_n");

  CGOFrame fr;
  fr.n = n;
  fr.p = p;
  fr.xi = xi;
  fr.t = t;

  // mu = a xi_perp_hat + b e_n with  a |xi_perp| + b (p-1) xi_n = 0,
  // normalized with mu.e_n = b >= 0.
  const Eigen::VectorXd xi_perp_hat = xi_perp / perp_norm;
  double a = -(p - 1.0) * xi_n;
  double b = perp_norm;
  const double ab_norm = std::hypot(a, b);
  a /= ab_norm;
  b /= ab_norm;
  if (b == 0.0 && a < 0.0) a = -a;  // tie rule: mu.xi >= 0 when mu.e_n = 0
  fr.mu = a * xi_perp_hat;
  fr.mu[n - 1] += b;

  if (n == 3) {
    Eigen::Vector3d e3(0, 0, 1);
    Eigen::Vector3d x3(xi[0], xi[1], xi[2]);
    const Eigen::Vector3d cr = e3.cross(x3);
    fr.eta = cr / cr.norm();
  } else {
    // first standard basis vector with a nonzero residual against span{xi_perp_hat, e_n}
    // (mu lies in that span, so three orthogonalizations reduce to two)
    fr.eta = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd cand = Eigen::VectorXd::Zero(n);
      cand[j] = 1.0;
      cand -= cand.dot(xi_perp_hat) * xi_perp_hat;
      cand[n - 1] = 0.0;
      const double nn = cand.norm();
      if (nn > 1e-10) {
        fr.eta = cand / nn;
        break;
      }
    }
    if (fr.eta.norm() == 0.0) throw std::invalid_argument("build_frame: no direction left for eta");
  }

  const double mu_n = fr.mu[n - 1];
  fr.s = std::sqrt((t * t + xi.squaredNorm() + (p - 2.0) * xi_n * xi_n) /
                   (1.0 + (p - 2.0) * mu_n * mu_n));

  const std::complex<double> I(0.0, 1.0);
  fr.zeta_plus = (fr.s * fr.mu).cast<std::complex<double>>() +
                 I * (xi + t * fr.eta).cast<std::complex<double>>();
  fr.zeta_minus = (-fr.s * fr.mu).cast<std::complex<double>>() +
                  I * (xi - t * fr.eta).cast<std::complex<double>>();
  return fr;
}

std::complex<double> null_form(const CGOFrame& fr, bool plus) {
  return stretched_symbol(plus ? fr.zeta_plus : fr.zeta_minus, fr.p, fr.n);
}

double plane_wave_residual(double gamma_const, const CGOFrame& fr,
                           const std::vector<Eigen::VectorXd>& sample_points, bool plus) {
  if (!(gamma_const > 0.0)) throw std::invalid_argument("plane_wave_residual: gamma must be positive");
  const Eigen::VectorXcd& z = plus ? fr.zeta_plus : fr.zeta_minus;
  const std::complex<double> symbol = null_form(fr, plus);
  double worst = 0.0;
  for (const Eigen::VectorXd& x : sample_points) {
    if (x.size() != fr.n) throw std::invalid_argument("plane_wave_residual: sample has wrong dimension");
    double re = 0.0;
    for (int k = 0; k < fr.n; ++k) re += z[k].real() * x[k];
    worst = std::max(worst, std::sqrt(gamma_const) * std::abs(symbol) * std::exp(re));
  }
  return worst;
}

}  // namespace dnl
