#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace tkrr {

/// Design points x_1..x_n in R^d, stored one point per row.
class Covariates {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// Throws InvalidArgument when empty or when any coordinate is not finite.
  explicit Covariates(Matrix points);

  [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(points_.rows()); }
  [[nodiscard]] std::size_t d() const { return static_cast<std::size_t>(points_.cols()); }
  [[nodiscard]] std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * d(), d()};
  }
  [[nodiscard]] const Matrix& points() const { return points_; }

 private:
  Matrix points_;
};

enum class KernelKind { Gaussian };

struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  double bandwidth = 1.0;

  /// exp(-|x-y|^2 / (2 h^2)); throws InvalidArgument unless 0 < h < inf.
  static KernelSpec gaussian(double bandwidth);
};

/// h = sqrt(d/2), the bandwidth used for the d-dimensional cube experiments.
double auto_bandwidth(std::size_t d);

/// Human-readable form used in output headers, e.g. "gaussian(h=1.4142135623730951)".
std::string describe(const KernelSpec& spec);

/// Normalized empirical kernel matrix K = (1/n) * kernel(x_i, x_j).
struct KernelMatrix {
  Eigen::MatrixXd entries;

  [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(entries.rows()); }
};

/// n points drawn i.i.d. uniform on [0,1)^d, row by row.
Covariates sample_uniform_cube(std::size_t n, std::size_t d, std::uint64_t seed);

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// Rows are filled independently, so the result does not depend on `threads`
/// (0 = hardware concurrency).
KernelMatrix kernel_matrix(const Covariates& x, const KernelSpec& spec, unsigned threads = 1);

/// Cross-kernel vector (kernel(x, x_1), ..., kernel(x, x_n)), unnormalized.
Eigen::VectorXd kernel_column(const Covariates& x, const KernelSpec& spec,
                              std::span<const double> point);

/// Headerless CSV, one point per row.
Covariates read_covariates_csv(const std::filesystem::path& path);
void write_covariates_csv(const std::filesystem::path& path, const Covariates& x);

}  // namespace tkrr
