#pragma once
// Internal damped-Newton engine minimizing
//   E_delta(v) = sum_T area (gbar_T/p) (|grad v|_T^2 + delta^2)^{p/2}
//              + sum_i [ c_pow_i (v_i)_+^{mexp+1}/(mexp+1) + c_lin_i v_i ]
// over nodal fields with pinned boundary values, continuing delta through a
// decreasing sequence.  Shared by the elliptic solver and the parabolic
// time stepper (which differ only in the separable zeroth-order term).

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "assembly.hpp"
#include "dnl/elliptic.hpp"

namespace dnl::detail {

struct SeparableTerm {
  Eigen::VectorXd c_pow;    // >= 0, already scaled by the lumped masses
  Eigen::VectorXd c_lin;    // any sign, already scaled by the lumped masses
  double mexp = 1.0;        // exponent m of the power-law part
  double hess_clamp = 0.0;  // for mexp < 1 the Hessian factor uses max(v, clamp)
};

struct NewtonReport {
  int iterations = 0;
  double initial_grad_norm = 0.0;
  double final_grad_norm = 0.0;  // absolute
  double final_energy = 0.0;
  double delta_floor = 0.0;
};

inline double energy_value(const P1Geometry& geom, const Eigen::VectorXd& gamma_tri, double p,
                           const SeparableTerm& z, const Eigen::VectorXd& v, double delta) {
  const TriangleMesh& mesh = *geom.mesh;
  double total = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector2d g =
        geom.grad[t] * Eigen::Vector3d(v[tri[0]], v[tri[1]], v[tri[2]]);
    const double s = g.squaredNorm() + delta * delta;
    total += geom.area[t] * (gamma_tri[t] / p) * std::pow(s, 0.5 * p);
  }
  for (int i = 0; i < v.size(); ++i) {
    if (z.c_pow[i] != 0.0 && v[i] > 0.0)
      total += z.c_pow[i] * std::pow(v[i], z.mexp + 1.0) / (z.mexp + 1.0);
    total += z.c_lin[i] * v[i];
  }
  return total;
}

// Residual restricted to interior nodes (boundary entries zero).  Also
// returns a rounding-floor estimate built from absolute contributions.
inline void residual(const P1Geometry& geom, const Eigen::VectorXd& gamma_tri, double p,
                     const SeparableTerm& z, const Eigen::VectorXd& v, double delta,
                     Eigen::VectorXd& grad, double& floor_estimate) {
  const TriangleMesh& mesh = *geom.mesh;
  grad.setZero(v.size());
  Eigen::VectorXd mag = Eigen::VectorXd::Zero(v.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector2d g =
        geom.grad[t] * Eigen::Vector3d(v[tri[0]], v[tri[1]], v[tri[2]]);
    const double s = g.squaredNorm() + delta * delta;
    if (s == 0.0) continue;  // flux vanishes there for every p > 1
    const double w = geom.area[t] * gamma_tri[t] * std::pow(s, 0.5 * (p - 2.0));
    for (int i = 0; i < 3; ++i) {
      const double c = w * g.dot(geom.grad[t].col(i));
      grad[tri[i]] += c;
      mag[tri[i]] += std::abs(c);
    }
  }
  for (int i = 0; i < v.size(); ++i) {
    if (z.c_pow[i] != 0.0 && v[i] > 0.0) {
      const double c = z.c_pow[i] * std::pow(v[i], z.mexp);
      grad[i] += c;
      mag[i] += std::abs(c);
    }
    grad[i] += z.c_lin[i];
    mag[i] += std::abs(z.c_lin[i]);
  }
  double mag2 = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    if (mesh.node_on_boundary[i]) {
      grad[i] = 0.0;
    } else {
      mag2 += mag[i] * mag[i];
    }
  }
  floor_estimate = std::numeric_limits<double>::epsilon() * std::sqrt(mag2);
}

inline double zeroth_hessian_factor(double v, double mexp, double clamp) {
  if (mexp == 1.0) return v > 0.0 ? 1.0 : 0.0;
  if (mexp < 1.0) return mexp * std::pow(std::max(v, clamp), mexp - 1.0);
  return v > 0.0 ? mexp * std::pow(v, mexp - 1.0) : 0.0;
}

inline SparseMat hessian(const P1Geometry& geom, const Eigen::VectorXd& gamma_tri, double p,
                         const SeparableTerm& z, const Eigen::VectorXd& v, double delta) {
  const TriangleMesh& mesh = *geom.mesh;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(mesh.num_triangles()) * 9 + v.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector2d g =
        geom.grad[t] * Eigen::Vector3d(v[tri[0]], v[tri[1]], v[tri[2]]);
    const double s = g.squaredNorm() + delta * delta;
    if (s == 0.0) continue;
    const double w0 = geom.area[t] * gamma_tri[t] * std::pow(s, 0.5 * (p - 2.0));
    const double w1 = geom.area[t] * gamma_tri[t] * (p - 2.0) * std::pow(s, 0.5 * (p - 4.0));
    const Eigen::Vector3d gg = geom.grad[t].transpose() * g;
    const Eigen::Matrix3d local =
        w0 * geom.grad[t].transpose() * geom.grad[t] + w1 * gg * gg.transpose();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], local(i, j));
  }
  for (int i = 0; i < v.size(); ++i) {
    if (z.c_pow[i] == 0.0) continue;
    const double d = z.c_pow[i] * zeroth_hessian_factor(v[i], z.mexp, z.hess_clamp);
    if (d != 0.0) trip.emplace_back(i, i, d);
  }
  SparseMat H(v.size(), v.size());
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

inline double max_element_gradient(const P1Geometry& geom, const Eigen::VectorXd& v) {
  const TriangleMesh& mesh = *geom.mesh;
  double gmax = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector2d g =
        geom.grad[t] * Eigen::Vector3d(v[tri[0]], v[tri[1]], v[tri[2]]);
    gmax = std::max(gmax, g.norm());
  }
  return gmax;
}

inline std::vector<double> continuation_deltas(const SolverSettings& st, double init_grad_max) {
  if (!(st.grad_tol > 0.0)) throw std::invalid_argument("SolverSettings: grad_tol must be positive");
  if (st.delta_abs_seq) {
    if (st.delta_abs_seq->empty()) throw std::invalid_argument("SolverSettings: empty delta sequence");
    for (size_t k = 0; k < st.delta_abs_seq->size(); ++k) {
      const double d = (*st.delta_abs_seq)[k];
      if (!(d >= 0.0) || (k > 0 && !(d < (*st.delta_abs_seq)[k - 1])))
        throw std::invalid_argument("SolverSettings: delta sequence must be strictly decreasing and nonnegative");
    }
    return *st.delta_abs_seq;
  }
  std::vector<double> deltas;
  for (double f : st.delta_rel_seq) {
    const double d = std::max(f * init_grad_max, st.delta_abs_floor);
    if (deltas.empty() || d < deltas.back()) deltas.push_back(d);
  }
  if (deltas.empty()) deltas.push_back(st.delta_abs_floor);
  return deltas;
}

// Minimizes in place; v must carry the pinned boundary values on entry.
inline NewtonReport minimize(const P1Geometry& geom, const Eigen::VectorXd& gamma_tri, double p,
                             const SeparableTerm& z, const SolverSettings& st, Eigen::VectorXd& v) {
  const TriangleMesh& mesh = *geom.mesh;
  if (z.mexp < 1.0 && z.c_pow.maxCoeff() > 0.0 && !(z.hess_clamp > 0.0))
    throw std::invalid_argument("minimize: mexp < 1 requires a positive Hessian clamp");

  const std::vector<double> deltas = continuation_deltas(st, max_element_gradient(geom, v));
  const DirichletIndex idx(mesh);

  Eigen::SimplicialLDLT<SparseMat> ldlt;
  bool pattern_ready = false;

  NewtonReport rep;
  rep.delta_floor = deltas.back();

  Eigen::VectorXd grad(v.size()), d_full = Eigen::VectorXd::Zero(v.size());
  double r_ref = 0.0;
  bool r_ref_set = false;

  for (size_t stage = 0; stage < deltas.size(); ++stage) {
    const double delta = deltas[stage];
    const bool last = stage + 1 == deltas.size();
    int no_progress = 0;  // consecutive steps with energy decrease at rounding level

    for (;;) {
      double floor_est = 0.0;
      residual(geom, gamma_tri, p, z, v, delta, grad, floor_est);
      double nr = 0.0;
      for (int k = 0; k < idx.count(); ++k) nr += grad[idx.interior[k]] * grad[idx.interior[k]];
      nr = std::sqrt(nr);
      if (!r_ref_set) {
        r_ref = nr;
        r_ref_set = true;
        rep.initial_grad_norm = nr;
      }
      rep.final_grad_norm = nr;

      const double tol = (last ? st.grad_tol : std::max(st.grad_tol, 1e-8)) * r_ref;
      if (nr <= tol) break;

      // A descent method that cannot lower the energy anymore sits at the
      // rounding floor of the assembly; accept if the residual is small.
      if (no_progress >= 5) {
        if (nr <= std::max(1e-6 * r_ref, 1e3 * floor_est)) break;
        std::ostringstream os;
        os << "solver stagnated above tolerance: |r| = " << nr << ", reference " << r_ref
           << ", delta stage " << stage << ", iteration " << rep.iterations;
        throw SolveError(os.str());
      }

      if (rep.iterations >= st.max_newton) {
        std::ostringstream os;
        os << "no convergence within " << st.max_newton << " Newton iterations: |r| = " << nr
           << ", reference " << r_ref << ", tolerance " << tol << ", delta stage " << stage << "/"
           << deltas.size();
        throw SolveError(os.str());
      }

      SparseMat H = hessian(geom, gamma_tri, p, z, v, delta);
      SparseMat Hii = restrict_interior(H, idx);
      if (!pattern_ready) {
        ldlt.analyzePattern(Hii);
        pattern_ready = true;
      }
      ldlt.factorize(Hii);
      if (ldlt.info() != Eigen::Success) {
        // nearly singular Hessian (fully degenerate gradient patch); shift and retry
        const double shift = 1e-12 * Hii.diagonal().cwiseAbs().maxCoeff() + 1e-300;
        SparseMat I(idx.count(), idx.count());
        I.setIdentity();
        Hii = Hii + shift * I;
        ldlt.factorize(Hii);
        if (ldlt.info() != Eigen::Success) throw SolveError("Hessian factorization failed");
      }

      Eigen::VectorXd r_i(idx.count());
      for (int k = 0; k < idx.count(); ++k) r_i[k] = grad[idx.interior[k]];
      Eigen::VectorXd d_i = ldlt.solve(-r_i);

      double gd = r_i.dot(d_i);
      if (!(gd < 0.0)) {  // not a descent direction; fall back to steepest descent
        d_i = -r_i;
        gd = -nr * nr;
      }
      for (int k = 0; k < idx.count(); ++k) d_full[idx.interior[k]] = d_i[k];

      const double e0 = energy_value(geom, gamma_tri, p, z, v, delta);
      double step = 1.0;
      bool accepted = false;
      double et = e0;
      for (int bt = 0; bt <= st.armijo.max_backtracks; ++bt) {
        const Eigen::VectorXd trial = v + step * d_full;
        et = energy_value(geom, gamma_tri, p, z, trial, delta);
        // rounding allowance keeps full Newton steps viable near the optimum
        if (et <= e0 + st.armijo.slope_fraction * step * gd +
                      1e-14 * (std::abs(e0) + std::abs(et))) {
          v = trial;
          accepted = true;
          break;
        }
        step *= st.armijo.backtrack;
      }
      ++rep.iterations;
      if (!accepted) {
        if (nr <= std::max(1e-6 * r_ref, 1e3 * floor_est)) break;
        std::ostringstream os;
        os << "line search failed: |r| = " << nr << ", reference " << r_ref << ", delta stage "
           << stage << ", iteration " << rep.iterations;
        throw SolveError(os.str());
      }
      if (e0 - et <= 1e-14 * (std::abs(e0) + std::abs(et)))
        ++no_progress;
      else
        no_progress = 0;
    }
  }

  rep.final_energy = energy_value(geom, gamma_tri, p, z, v, deltas.back());
  return rep;
}

}  // namespace dnl::detail
