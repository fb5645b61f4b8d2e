#pragma once
// Internal P1 assembly helpers: sparse stiffness matrices, Dirichlet index
// bookkeeping, and SPD solves with the reduced interior system.

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "dnl/fields.hpp"
#include "dnl/mesh.hpp"

namespace dnl::detail {

using SparseMat = Eigen::SparseMatrix<double>;

// Stiffness for a per-triangle 2x2 diffusion tensor:  K_ij = sum_T area grad_i . A_T grad_j.
inline SparseMat assemble_tensor_stiffness(const P1Geometry& geom,
                                           const std::vector<Eigen::Matrix2d>& tensor) {
  const TriangleMesh& mesh = *geom.mesh;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(mesh.num_triangles()) * 9);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Matrix3d local =
        geom.area[t] * geom.grad[t].transpose() * tensor[t] * geom.grad[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], local(i, j));
  }
  SparseMat K(mesh.num_nodes(), mesh.num_nodes());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

inline SparseMat assemble_isotropic_stiffness(const P1Geometry& geom,
                                              const Eigen::VectorXd& tri_weight) {
  std::vector<Eigen::Matrix2d> tensor(geom.mesh->num_triangles());
  for (int t = 0; t < geom.mesh->num_triangles(); ++t)
    tensor[t] = tri_weight[t] * Eigen::Matrix2d::Identity();
  return assemble_tensor_stiffness(geom, tensor);
}

// Interior/boundary split for Dirichlet problems.
struct DirichletIndex {
  std::vector<int> interior;          // node ids
  std::vector<int> pos;               // node id -> interior position, -1 for boundary
  explicit DirichletIndex(const TriangleMesh& mesh) : pos(mesh.num_nodes(), -1) {
    for (int i = 0; i < mesh.num_nodes(); ++i) {
      if (!mesh.node_on_boundary[i]) {
        pos[i] = static_cast<int>(interior.size());
        interior.push_back(i);
      }
    }
  }
  int count() const { return static_cast<int>(interior.size()); }
};

inline SparseMat restrict_interior(const SparseMat& K, const DirichletIndex& idx) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(K.nonZeros());
  for (int col = 0; col < K.outerSize(); ++col) {
    if (idx.pos[col] < 0) continue;
    for (SparseMat::InnerIterator it(K, col); it; ++it) {
      if (idx.pos[it.row()] >= 0) trip.emplace_back(idx.pos[it.row()], idx.pos[col], it.value());
    }
  }
  SparseMat Kii(idx.count(), idx.count());
  Kii.setFromTriplets(trip.begin(), trip.end());
  return Kii;
}

// Solves K u = rhs with u pinned to bvalues at boundary nodes.  K is the full
// stiffness; rhs is the full load vector (boundary entries ignored).
inline Eigen::VectorXd solve_dirichlet(const SparseMat& K, const DirichletIndex& idx,
                                       const TriangleMesh& mesh, const Eigen::VectorXd& bvalues,
                                       const Eigen::VectorXd& rhs) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int k = 0; k < mesh.num_boundary_nodes(); ++k) full[mesh.boundary_nodes[k]] = bvalues[k];

  const Eigen::VectorXd coupled = K * full;  // K_IB g contribution
  Eigen::VectorXd rhs_i(idx.count());
  for (int k = 0; k < idx.count(); ++k) rhs_i[k] = rhs[idx.interior[k]] - coupled[idx.interior[k]];

  const SparseMat Kii = restrict_interior(K, idx);
  Eigen::SimplicialLDLT<SparseMat> ldlt(Kii);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("solve_dirichlet: factorization failed");
  const Eigen::VectorXd ui = ldlt.solve(rhs_i);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("solve_dirichlet: back-substitution failed");

  for (int k = 0; k < idx.count(); ++k) full[idx.interior[k]] = ui[k];
  return full;
}

}  // namespace dnl::detail
