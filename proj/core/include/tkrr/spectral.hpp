#pragma once

#include <cstddef>
#include <filesystem>
#include <span>

#include <Eigen/Dense>

#include "tkrr/csv.hpp"
#include "tkrr/kernel.hpp"

namespace tkrr {

/// Eigenvalues below this fraction of the leading eigenvalue are set to zero.
inline constexpr double kEigenFloorRelative = 1e-12;
/// Eigenvalues below -kPsdTolerance * mu_1 mean the input was not PSD.
inline constexpr double kPsdTolerance = 1e-10;

enum class EigenSolverKind {
  SelfAdjoint,  ///< Eigen's tridiagonal QR solver.
  Jacobi,       ///< Cyclic Jacobi rotations, dependency-free fallback.
};

/// K = U diag(mu) U^T with mu sorted in descending order.
///
/// Columns of U follow a fixed sign convention: the largest-magnitude entry
/// of every column is positive (ties go to the lowest row index). The leading
/// r columns play the role of U_1, the remaining n - r columns of U_2.
class EigenSystem {
 public:
  /// Throws InvalidArgument if sizes disagree, mu is not descending, or any
  /// eigenvalue is negative.
  EigenSystem(Eigen::VectorXd mu, Eigen::MatrixXd u, std::size_t floored = 0);

  [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(mu_.size()); }
  [[nodiscard]] const Eigen::VectorXd& mu() const { return mu_; }
  [[nodiscard]] const Eigen::MatrixXd& U() const { return u_; }
  [[nodiscard]] double mu(std::size_t k) const { return mu_(static_cast<Eigen::Index>(k)); }
  /// Number of eigenvalues that were floored to zero during decomposition.
  [[nodiscard]] std::size_t floored_count() const { return floored_; }

  [[nodiscard]] auto leading_vectors(std::size_t r) const {
    return u_.leftCols(static_cast<Eigen::Index>(r));
  }
  [[nodiscard]] auto trailing_vectors(std::size_t r) const {
    return u_.rightCols(static_cast<Eigen::Index>(n() - r));
  }
  [[nodiscard]] auto leading_values(std::size_t r) const {
    return mu_.head(static_cast<Eigen::Index>(r));
  }

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd u_;
  std::size_t floored_ = 0;
};

/// Diagonal of Gamma_lambda: mu_i / (mu_i + lambda) on the first r modes, 0 after.
struct SpectralFilter {
  Eigen::VectorXd values;
  std::size_t r = 0;
  double lambda = 0.0;
  /// mu_r == mu_{r+1} (within rounding): the cut falls inside an eigenspace.
  bool splits_eigenspace = false;
};

/// Throws InvalidArgument for a non-symmetric input (relative 1e-12) and
/// NumericalFailure if the solver does not converge or the matrix has an
/// eigenvalue below -1e-10 * mu_1.
EigenSystem eigendecompose(const KernelMatrix& k,
                           EigenSolverKind solver = EigenSolverKind::SelfAdjoint);

/// Flips columns so the largest-magnitude entry of each is positive.
void apply_sign_convention(Eigen::MatrixXd& u);

namespace detail {

struct RawEigen {
  Eigen::VectorXd values;   // unsorted
  Eigen::MatrixXd vectors;  // columns match values
  int sweeps = 0;
};

/// Cyclic Jacobi eigenvalue iteration on a symmetric matrix.
RawEigen jacobi_eigen(const Eigen::MatrixXd& a, int max_sweeps = 64);

/// Improves an approximate eigendecomposition of the symmetric matrix `a` by
/// `steps` rounds of extended-precision iterative refinement. Columns keep
/// their order and orientation.
RawEigen refine_eigenpairs(const Eigen::MatrixXd& a, const Eigen::VectorXd& values,
                           const Eigen::MatrixXd& vectors, int steps = 2);

}  // namespace detail

SpectralFilter spectral_filter(const Eigen::VectorXd& mu, double lambda, std::size_t r);
SpectralFilter spectral_filter(const EigenSystem& eigen, double lambda, std::size_t r);

/// K~ = sum_{k<=r} mu_k u_k u_k^T.
KernelMatrix truncated_kernel_matrix(const EigenSystem& eigen, std::size_t r);

/// psi_1(x), ..., psi_r(x), where psi_k is the minimum-norm interpolant of
/// sqrt(n) u_k at the training points:
///   psi_k(x) = (1 / (sqrt(n) mu_k)) sum_j u_{kj} kernel(x, x_j).
/// Throws DegeneracyError if any of mu_1..mu_r is zero.
Eigen::VectorXd psi_values(const EigenSystem& eigen, const Covariates& x, const KernelSpec& spec,
                           std::size_t r, std::span<const double> point);

/// psi_k(point) for a 0-based mode index k.
double psi_eval(const EigenSystem& eigen, const Covariates& x, const KernelSpec& spec,
                std::size_t k, std::span<const double> point);

/// Truncated kernel sum_{k<=r} mu_k psi_k(x) psi_k(y).
double ktilde_eval(const EigenSystem& eigen, const Covariates& x, const KernelSpec& spec,
                   std::size_t r, std::span<const double> p, std::span<const double> q);

/// First data row holds mu, each following row one eigenvector (column of U).
void write_eigen_csv(const std::filesystem::path& path, const EigenSystem& eigen,
                     const csv::Metadata& metadata);
EigenSystem read_eigen_csv(const std::filesystem::path& path);

}  // namespace tkrr
