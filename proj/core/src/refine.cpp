#include <Eigen/Dense>

#include <cmath>

#include "tkrr/spectral.hpp"

namespace tkrr::detail {

// One or more Ogita-Aishima refinement steps carried out in long double:
//   R = I - X^T X,  S = X^T A X,  d_i = s_ii / (1 - r_ii),
//   E_ij = (s_ij + d_j r_ij) / (d_j - d_i) for well separated pairs, r_ij / 2 otherwise,
//   X <- X + X E.
// The backward error of a double-precision solver is about eps * |A| for every
// eigenpair; after refinement it shrinks to roughly eps * |mu_k|, which keeps
// the min-norm basis accurate for the smallest eigenvalues.
RawEigen refine_eigenpairs(const Eigen::MatrixXd& a, const Eigen::VectorXd& values,
                           const Eigen::MatrixXd& vectors, int steps) {
  using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const Eigen::Index n = a.rows();
  const MatrixL al = a.cast<long double>();
  MatrixL x = vectors.cast<long double>();
  VectorL d = values.cast<long double>();
  const long double a_norm = al.norm();

  for (int step = 0; step < steps; ++step) {
    const MatrixL r = MatrixL::Identity(n, n) - x.transpose() * x;
    MatrixL s = x.transpose() * (al * x);
    // Rounding leaves S slightly asymmetric; divided by a small gap that
    // asymmetry would show up as lost orthogonality between close modes.
    s = (0.5L * (s + s.transpose())).eval();
    for (Eigen::Index i = 0; i < n; ++i) d(i) = s(i, i) / (1.0L - r(i, i));
    MatrixL off = s;
    off.diagonal() -= d;
    const long double delta = 2.0L * (off.norm() + a_norm * r.norm());
    MatrixL e(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const long double gap = d(j) - d(i);
        e(i, j) = (i != j && std::abs(gap) > delta) ? (s(i, j) + d(j) * r(i, j)) / gap : r(i, j) / 2.0L;
      }
    }
    x += x * e;
  }
  return RawEigen{d.cast<double>(), x.cast<double>(), steps};
}

}  // namespace tkrr::detail
