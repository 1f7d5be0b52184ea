#include "tkrr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "tkrr/errors.hpp"

namespace tkrr {

EigenSystem::EigenSystem(Eigen::VectorXd mu, Eigen::MatrixXd u, std::size_t floored)
    : mu_(std::move(mu)), u_(std::move(u)), floored_(floored) {
  if (mu_.size() < 1) throw InvalidArgument("eigen system must have at least one mode");
  if (u_.rows() != mu_.size() || u_.cols() != mu_.size()) {
    throw InvalidArgument("eigenvector matrix must be n x n with n = number of eigenvalues");
  }
  for (Eigen::Index i = 0; i < mu_.size(); ++i) {
    if (!std::isfinite(mu_(i)) || mu_(i) < 0.0) {
      throw InvalidArgument("eigenvalues must be finite and nonnegative");
    }
    if (i > 0 && mu_(i) > mu_(i - 1)) throw InvalidArgument("eigenvalues must be in descending order");
  }
}

void apply_sign_convention(Eigen::MatrixXd& u) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      const double a = std::abs(u(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (u(best, c) < 0.0) u.col(c) *= -1.0;
  }
}

EigenSystem eigendecompose(const KernelMatrix& k, EigenSolverKind solver) {
  const Eigen::MatrixXd& a = k.entries;
  if (a.rows() < 1 || a.rows() != a.cols()) throw InvalidArgument("kernel matrix must be square and non-empty");
  if (!a.allFinite()) throw InvalidArgument("kernel matrix has non-finite entries");
  const double max_abs = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * max_abs) {
    throw InvalidArgument("kernel matrix is not symmetric (max |K - K^T| = " + std::to_string(asym) + ")");
  }

  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  switch (solver) {
    case EigenSolverKind::SelfAdjoint: {
      const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
      if (es.info() != Eigen::Success) throw NumericalFailure("symmetric eigensolver did not converge");
      values = es.eigenvalues();
      vectors = es.eigenvectors();
      break;
    }
    case EigenSolverKind::Jacobi: {
      auto raw = detail::jacobi_eigen(0.5 * (a + a.transpose()));
      values = std::move(raw.values);
      vectors = std::move(raw.vectors);
      break;
    }
  }

  {
    auto refined = detail::refine_eigenpairs(a, values, vectors);
    values = std::move(refined.values);
    vectors = std::move(refined.vectors);
  }

  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return values(i) > values(j); });

  Eigen::VectorXd mu(n);
  Eigen::MatrixXd u(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    mu(c) = values(order[static_cast<std::size_t>(c)]);
    u.col(c) = vectors.col(order[static_cast<std::size_t>(c)]);
  }

  const double top = std::max(mu(0), 0.0);
  if (mu(n - 1) < -kPsdTolerance * top || (top == 0.0 && mu(n - 1) < 0.0)) {
    throw NumericalFailure("kernel matrix is not positive semidefinite (smallest eigenvalue " +
                           std::to_string(mu(n - 1)) + ")");
  }
  std::size_t floored = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mu(i) < kEigenFloorRelative * top || mu(i) <= 0.0) {
      if (mu(i) != 0.0) ++floored;
      mu(i) = 0.0;
    }
  }
  apply_sign_convention(u);
  return EigenSystem(std::move(mu), std::move(u), floored);
}

SpectralFilter spectral_filter(const Eigen::VectorXd& mu, double lambda, std::size_t r) {
  const auto n = static_cast<std::size_t>(mu.size());
  if (r < 1 || r > n) throw InvalidArgument("truncation level r must satisfy 1 <= r <= n");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");

  SpectralFilter filter;
  filter.r = r;
  filter.lambda = lambda;
  filter.values = Eigen::VectorXd::Zero(mu.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double m = mu(static_cast<Eigen::Index>(i));
    if (lambda == 0.0 && m <= 0.0) {
      throw DegeneracyError("lambda = 0 with a zero eigenvalue among the first r = " +
                            std::to_string(r) + " modes (index " + std::to_string(i + 1) + ")");
    }
    filter.values(static_cast<Eigen::Index>(i)) = m / (m + lambda);
  }
  if (r < n) {
    const double a = mu(static_cast<Eigen::Index>(r - 1));
    const double b = mu(static_cast<Eigen::Index>(r));
    const double top = mu.maxCoeff();
    filter.splits_eigenspace = a > 0.0 && std::abs(a - b) <= 1e-10 * top;
  }
  return filter;
}

SpectralFilter spectral_filter(const EigenSystem& eigen, double lambda, std::size_t r) {
  return spectral_filter(eigen.mu(), lambda, r);
}

KernelMatrix truncated_kernel_matrix(const EigenSystem& eigen, std::size_t r) {
  if (r < 1 || r > eigen.n()) throw InvalidArgument("truncation level r must satisfy 1 <= r <= n");
  const auto u1 = eigen.leading_vectors(r);
  const Eigen::MatrixXd scaled = u1 * eigen.leading_values(r).asDiagonal();
  Eigen::MatrixXd kt = scaled * u1.transpose();
  kt = 0.5 * (kt + kt.transpose()).eval();
  return KernelMatrix{std::move(kt)};
}

Eigen::VectorXd psi_values(const EigenSystem& eigen, const Covariates& x, const KernelSpec& spec,
                           std::size_t r, std::span<const double> point) {
  if (x.n() != eigen.n()) throw InvalidArgument("covariates and eigen system differ in n");
  if (r < 1 || r > eigen.n()) throw InvalidArgument("truncation level r must satisfy 1 <= r <= n");
  for (std::size_t k = 0; k < r; ++k) {
    if (eigen.mu(k) <= 0.0) {
      throw DegeneracyError("psi_" + std::to_string(k + 1) + " is undefined: eigenvalue is zero");
    }
  }
  // The sum cancels down to about mu_k / sqrt(n); extended-precision
  // accumulation keeps the relative error small for the tiny eigenvalues.
  const Eigen::Matrix<long double, Eigen::Dynamic, 1> kcol = kernel_column(x, spec, point).cast<long double>();
  const long double root_n = std::sqrt(static_cast<long double>(eigen.n()));
  Eigen::VectorXd psi(static_cast<Eigen::Index>(r));
  for (std::size_t k = 0; k < r; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const long double dot = eigen.U().col(col).cast<long double>().dot(kcol);
    psi(col) = static_cast<double>(dot / (root_n * eigen.mu(k)));
  }
  return psi;
}

double psi_eval(const EigenSystem& eigen, const Covariates& x, const KernelSpec& spec,
                std::size_t k, std::span<const double> point) {
  if (k >= eigen.n()) throw InvalidArgument("mode index out of range");
  if (eigen.mu(k) <= 0.0) {
    throw DegeneracyError("psi_" + std::to_string(k + 1) + " is undefined: eigenvalue is zero");
  }
  return psi_values(eigen, x, spec, k + 1, point)(static_cast<Eigen::Index>(k));
}

double ktilde_eval(const EigenSystem& eigen, const Covariates& x, const KernelSpec& spec,
                   std::size_t r, std::span<const double> p, std::span<const double> q) {
  const Eigen::VectorXd psi_p = psi_values(eigen, x, spec, r, p);
  const Eigen::VectorXd psi_q = psi_values(eigen, x, spec, r, q);
  return (eigen.leading_values(r).array() * psi_p.array() * psi_q.array()).sum();
}

void write_eigen_csv(const std::filesystem::path& path, const EigenSystem& eigen,
                     const csv::Metadata& metadata) {
  csv::Document doc;
  doc.add_metadata(metadata);
  doc.add_metadata("sign_convention", "largest-magnitude-entry-positive");
  doc.add_metadata("layout", "row1=mu(descending);row(k+1)=u_k");
  doc.add_metadata("n", std::to_string(eigen.n()));
  doc.add_metadata("floored", std::to_string(eigen.floored_count()));
  doc.add_numeric_row(std::vector<double>(eigen.mu().data(), eigen.mu().data() + eigen.n()));
  for (std::size_t k = 0; k < eigen.n(); ++k) {
    const Eigen::VectorXd col = eigen.U().col(static_cast<Eigen::Index>(k));
    doc.add_numeric_row(std::vector<double>(col.data(), col.data() + col.size()));
  }
  doc.write(path);
}

EigenSystem read_eigen_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  if (table.rows.empty()) throw IoError(path.string() + ": empty eigen file");
  const std::size_t n = table.rows.front().size();
  if (table.rows.size() != n + 1) {
    throw IoError(path.string() + ": expected " + std::to_string(n + 1) + " rows (mu + " +
                  std::to_string(n) + " eigenvectors), found " + std::to_string(table.rows.size()));
  }
  Eigen::VectorXd mu(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i <= n; ++i) {
    const auto& row = table.rows[i];
    if (row.size() != n) throw IoError(path.string() + ": row " + std::to_string(i + 1) + " has wrong length");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = csv::parse_double(row[j]);
      if (i == 0) {
        mu(static_cast<Eigen::Index>(j)) = v;
      } else {
        u(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i - 1)) = v;
      }
    }
  }
  const double ortho =
      (u.transpose() * u - Eigen::MatrixXd::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
  if (ortho > 1e-10) throw IoError(path.string() + ": eigenvectors are not orthonormal");
  std::size_t floored = 0;
  if (const auto* f = table.find_metadata("floored")) floored = csv::parse_index(*f);
  try {
    return EigenSystem(std::move(mu), std::move(u), floored);
  } catch (const InvalidArgument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace tkrr
