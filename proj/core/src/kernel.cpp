#include "tkrr/kernel.hpp"

#include <cmath>
#include <utility>

#include "tkrr/csv.hpp"
#include "tkrr/errors.hpp"
#include "tkrr/parallel.hpp"
#include "tkrr/random.hpp"

namespace tkrr {

Covariates::Covariates(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw InvalidArgument("covariates need n >= 1 points of dimension d >= 1");
  }
  if (!points_.allFinite()) throw InvalidArgument("covariates contain a non-finite coordinate");
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InvalidArgument("gaussian bandwidth must be positive and finite");
  }
  return KernelSpec{KernelKind::Gaussian, bandwidth};
}

double auto_bandwidth(std::size_t d) {
  if (d == 0) throw InvalidArgument("dimension must be >= 1");
  return std::sqrt(static_cast<double>(d) / 2.0);
}

std::string describe(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::Gaussian:
      return "gaussian(h=" + csv::format_double(spec.bandwidth) + ")";
  }
  return "unknown";
}

Covariates sample_uniform_cube(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw InvalidArgument("sample_uniform_cube needs n >= 1 and d >= 1");
  Covariates::Matrix points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) points(i, j) = rng.uniform();
  }
  return Covariates(std::move(points));
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("kernel_eval: points differ in dimension");
  double sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    sq += diff * diff;
  }
  switch (spec.kind) {
    case KernelKind::Gaussian:
      return std::exp(-sq / (2.0 * spec.bandwidth * spec.bandwidth));
  }
  throw InvalidArgument("unsupported kernel kind");
}

KernelMatrix kernel_matrix(const Covariates& x, const KernelSpec& spec, unsigned threads) {
  const std::size_t n = x.n();
  const double scale = 1.0 / static_cast<double>(n);
  KernelMatrix k{Eigen::MatrixXd(n, n)};
  parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          kernel_eval(spec, x.point(i), x.point(j)) * scale;
    }
  });
  return k;
}

Eigen::VectorXd kernel_column(const Covariates& x, const KernelSpec& spec,
                              std::span<const double> point) {
  if (point.size() != x.d()) throw InvalidArgument("query point has the wrong dimension");
  Eigen::VectorXd col(static_cast<Eigen::Index>(x.n()));
  for (std::size_t j = 0; j < x.n(); ++j) {
    col(static_cast<Eigen::Index>(j)) = kernel_eval(spec, point, x.point(j));
  }
  return col;
}

Covariates read_covariates_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  if (table.rows.empty()) throw IoError(path.string() + ": no covariate rows");
  const std::size_t d = table.rows.front().size();
  Covariates::Matrix points(static_cast<Eigen::Index>(table.rows.size()),
                            static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != d) {
      throw IoError(path.string() + ": row " + std::to_string(i + 1) + " has " +
                    std::to_string(row.size()) + " columns, expected " + std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = csv::parse_double(row[j]);
    }
  }
  return Covariates(std::move(points));
}

void write_covariates_csv(const std::filesystem::path& path, const Covariates& x) {
  csv::Document doc;
  for (std::size_t i = 0; i < x.n(); ++i) {
    const auto p = x.point(i);
    doc.add_numeric_row(std::vector<double>(p.begin(), p.end()));
  }
  doc.write(path);
}

}  // namespace tkrr
