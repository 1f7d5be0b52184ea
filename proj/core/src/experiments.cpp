#include "tkrr/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tkrr/alignment.hpp"
#include "tkrr/errors.hpp"
#include "tkrr/parallel.hpp"

namespace tkrr {

std::vector<double> log_grid(double min, double max, std::size_t points) {
  if (points == 0) throw InvalidArgument("lambda grid must have at least one point");
  if (!(min > 0.0) || !(max >= min) || !std::isfinite(max)) {
    throw InvalidArgument("log grid needs 0 < min <= max < inf");
  }
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = min;
    return out;
  }
  const double lo = std::log10(min);
  const double step = (std::log10(max) - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) out[i] = std::pow(10.0, lo + step * static_cast<double>(i));
  out.front() = min;
  out.back() = max;
  return out;
}

std::vector<double> LambdaGrid::values() const { return log_grid(min, max, points); }

std::string LambdaGrid::describe() const {
  return "log10-even[" + csv::format_double(min) + "," + csv::format_double(max) + "]x" +
         std::to_string(points);
}

namespace {

void require_increasing(std::span<const double> grid, const char* what) {
  if (grid.empty()) throw InvalidArgument(std::string(what) + " must be nonempty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw InvalidArgument(std::string(what) + " must be strictly increasing");
  }
}

std::vector<double> sorted_unique(std::span<const double> values, const char* what) {
  if (values.empty()) throw InvalidArgument(std::string(what) + " must be nonempty");
  std::vector<double> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CurveRow to_row(double sweep, double key, const MseReport& rep) {
  return CurveRow{sweep, key, rep.bias_reg, rep.bias_tail, rep.variance, rep.total};
}

}  // namespace

CurveTable lambda_curve(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi, std::size_t r,
                        std::span<const double> lambda_grid, std::span<const double> sigmas,
                        std::size_t n, unsigned threads) {
  require_increasing(lambda_grid, "lambda grid");
  const std::vector<double> keys = sorted_unique(sigmas, "sigma list");
  CurveTable table;
  table.axis = CurveAxis::Lambda;
  table.rows.resize(keys.size() * lambda_grid.size());
  parallel_for(table.rows.size(), resolve_threads(threads), [&](std::size_t cell) {
    const double sigma = keys[cell / lambda_grid.size()];
    const double lambda = lambda_grid[cell % lambda_grid.size()];
    table.rows[cell] = to_row(lambda, sigma, exact_mse(mu, xi, r, lambda, sigma, n));
  });
  return table;
}

CurveTable r_curve(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi, double lambda,
                   std::span<const std::size_t> r_range, std::span<const double> sigma_over_sqrtn,
                   std::size_t n, unsigned threads) {
  if (r_range.empty()) throw InvalidArgument("r range must be nonempty");
  std::vector<std::size_t> rs(r_range.begin(), r_range.end());
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  if (rs.front() < 1 || rs.back() > static_cast<std::size_t>(mu.size())) {
    throw InvalidArgument("r range must lie inside [1, n]");
  }
  const std::vector<double> keys = sorted_unique(sigma_over_sqrtn, "sigma/sqrt(n) list");
  const double root_n = std::sqrt(static_cast<double>(n));
  CurveTable table;
  table.axis = CurveAxis::Truncation;
  table.rows.resize(keys.size() * rs.size());
  parallel_for(table.rows.size(), resolve_threads(threads), [&](std::size_t cell) {
    const double key = keys[cell / rs.size()];
    const std::size_t r = rs[cell % rs.size()];
    table.rows[cell] =
        to_row(static_cast<double>(r), key, exact_mse(mu, xi, r, lambda, key * root_n, n));
  });
  return table;
}

void write_curve_csv(const std::filesystem::path& path, const CurveTable& table,
                     const csv::Metadata& metadata) {
  csv::Document doc;
  doc.add_metadata(metadata);
  const bool by_lambda = table.axis == CurveAxis::Lambda;
  doc.add_metadata("axis", by_lambda ? "lambda" : "r");
  doc.set_header({by_lambda ? "lambda" : "r", by_lambda ? "sigma" : "sigma_over_sqrtn", "bias_reg",
                  "bias_tail", "variance", "total"});
  for (const CurveRow& row : table.rows) {
    doc.add_row({by_lambda ? csv::format_double(row.sweep_value)
                           : std::to_string(static_cast<std::size_t>(row.sweep_value)),
                 csv::format_double(row.sigma_key), csv::format_double(row.bias_reg),
                 csv::format_double(row.bias_tail), csv::format_double(row.variance),
                 csv::format_double(row.total)});
  }
  doc.write(path);
}

std::string axis_name(SurfaceAxisKind kind) {
  switch (kind) {
    case SurfaceAxisKind::Lambda:
      return "lambda";
    case SurfaceAxisKind::Truncation:
      return "r";
    case SurfaceAxisKind::Sigma:
      return "sigma";
    case SurfaceAxisKind::SigmaOverSqrtN:
      return "sigma_over_sqrtn";
  }
  return "unknown";
}

namespace {

bool is_noise_axis(SurfaceAxisKind kind) {
  return kind == SurfaceAxisKind::Sigma || kind == SurfaceAxisKind::SigmaOverSqrtN;
}

void apply_axis(SurfaceAxisKind kind, double value, SurfaceParams& p) {
  switch (kind) {
    case SurfaceAxisKind::Lambda:
      p.lambda = value;
      break;
    case SurfaceAxisKind::Truncation:
      if (value < 1.0 || value != std::floor(value)) throw InvalidArgument("r axis values must be positive integers");
      p.r = static_cast<std::size_t>(value);
      break;
    case SurfaceAxisKind::Sigma:
      p.sigma = value;
      break;
    case SurfaceAxisKind::SigmaOverSqrtN:
      p.sigma = value * std::sqrt(static_cast<double>(p.n));
      break;
  }
}

}  // namespace

SurfaceGrid surface(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi, const SurfaceAxis& axis1,
                    const SurfaceAxis& axis2, const SurfaceParams& fixed, unsigned threads) {
  if (axis1.values.empty() || axis2.values.empty()) throw InvalidArgument("surface axes must be nonempty");
  if (axis1.kind == axis2.kind || (is_noise_axis(axis1.kind) && is_noise_axis(axis2.kind))) {
    throw InvalidArgument("surface axes must sweep different parameters");
  }
  SurfaceGrid grid{axis1, axis2,
                   Eigen::MatrixXd(static_cast<Eigen::Index>(axis1.values.size()),
                                   static_cast<Eigen::Index>(axis2.values.size()))};
  const std::size_t cols = axis2.values.size();
  parallel_for(axis1.values.size() * cols, resolve_threads(threads), [&](std::size_t cell) {
    const std::size_t i = cell / cols;
    const std::size_t j = cell % cols;
    SurfaceParams p = fixed;
    apply_axis(axis1.kind, axis1.values[i], p);
    apply_axis(axis2.kind, axis2.values[j], p);
    grid.totals(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        exact_mse(mu, xi, p.r, p.lambda, p.sigma, p.n).total;
  });
  return grid;
}

void write_surface_csv(const std::filesystem::path& path, const SurfaceGrid& grid,
                       const csv::Metadata& metadata) {
  csv::Document doc;
  doc.add_metadata(metadata);
  const std::string name1 = axis_name(grid.axis1.kind);
  const std::string name2 = axis_name(grid.axis2.kind);
  doc.add_metadata("axis1", name1);
  doc.add_metadata("axis2", name2);
  doc.add_metadata("layout", "row-major totals; rows=axis1, columns=axis2");
  std::vector<std::string> header{name1};
  for (const double v : grid.axis2.values) header.push_back(name2 + "=" + csv::format_double(v));
  doc.set_header(std::move(header));
  for (std::size_t i = 0; i < grid.axis1.values.size(); ++i) {
    std::vector<std::string> row{csv::format_double(grid.axis1.values[i])};
    for (Eigen::Index j = 0; j < grid.totals.cols(); ++j) {
      row.push_back(csv::format_double(grid.totals(static_cast<Eigen::Index>(i), j)));
    }
    doc.add_row(std::move(row));
  }
  doc.write(path);
}

GridMinimum minimize_over_lambda(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi_sq,
                                 std::size_t r, std::span<const double> lambdas, double sigma,
                                 std::size_t n) {
  if (lambdas.empty()) throw InvalidArgument("lambda grid must be nonempty");
  GridMinimum best{std::numeric_limits<double>::infinity(), 0.0};
  // Visit in increasing lambda so that strict improvement keeps the smallest tie.
  std::vector<double> order(lambdas.begin(), lambdas.end());
  std::sort(order.begin(), order.end());
  for (const double lambda : order) {
    const double total = exact_mse_from_squares(mu, xi_sq, r, lambda, sigma, n).total;
    if (total < best.mse) best = GridMinimum{total, lambda};
  }
  return best;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope fit needs >= 2 paired points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw InvalidArgument("slope fit needs at least two distinct x values");
  return sxy / sxx;
}

RateStudyResult rate_study(double alpha, double gamma, std::span<const std::size_t> n_grid,
                           double sigma, const LambdaGrid& grid, const RateStudyOptions& options) {
  if (n_grid.empty()) throw InvalidArgument("n grid must be nonempty");
  if (!(sigma > 0.0)) throw InvalidArgument("rate study needs sigma > 0");
  const std::vector<double> lambdas = grid.values();

  RateStudyResult result;
  result.alpha = alpha;
  result.gamma = gamma;
  result.sigma = sigma;
  result.lambda_grid = grid;
  result.n_grid.assign(n_grid.begin(), n_grid.end());
  std::sort(result.n_grid.begin(), result.n_grid.end());
  const std::size_t m = result.n_grid.size();
  if (options.drop_smallest + 2 > m) throw InvalidArgument("too few sample sizes left for a slope fit");

  result.r_tkrr.resize(m);
  result.min_mse_tkrr.resize(m);
  result.min_mse_full.resize(m);
  result.argmin_lambda_tkrr.resize(m);
  result.argmin_lambda_full.resize(m);
  parallel_for(m, resolve_threads(options.threads), [&](std::size_t k) {
    const std::size_t n = result.n_grid[k];
    const SyntheticSpectra spectra = polynomial_spectra(n, alpha, gamma);
    const RateParams params = optimal_params(alpha, gamma, n, sigma * sigma, options.rounding);
    const GridMinimum tkrr = minimize_over_lambda(spectra.mu, spectra.xi_sq, params.r_star, lambdas, sigma, n);
    const GridMinimum full = minimize_over_lambda(spectra.mu, spectra.xi_sq, n, lambdas, sigma, n);
    result.r_tkrr[k] = params.r_star;
    result.min_mse_tkrr[k] = tkrr.mse;
    result.argmin_lambda_tkrr[k] = tkrr.lambda;
    result.min_mse_full[k] = full.mse;
    result.argmin_lambda_full[k] = full.lambda;
  });

  result.dropped = options.drop_smallest;
  std::vector<double> log_n;
  std::vector<double> log_tkrr;
  std::vector<double> log_full;
  for (std::size_t k = options.drop_smallest; k < m; ++k) {
    log_n.push_back(std::log(static_cast<double>(result.n_grid[k])));
    log_tkrr.push_back(std::log(result.min_mse_tkrr[k]));
    log_full.push_back(std::log(result.min_mse_full[k]));
  }
  result.slope_tkrr = ols_slope(log_n, log_tkrr);
  result.slope_full = ols_slope(log_n, log_full);
  return result;
}

void write_rate_study_csv(const std::filesystem::path& path, const RateStudyResult& result,
                          const csv::Metadata& metadata) {
  csv::Document doc;
  doc.add_metadata(metadata);
  doc.add_metadata("alpha", csv::format_double(result.alpha));
  doc.add_metadata("gamma", csv::format_double(result.gamma));
  doc.add_metadata("sigma", csv::format_double(result.sigma));
  doc.add_metadata("lambda_grid", result.lambda_grid.describe());
  doc.add_metadata("dropped_smallest", std::to_string(result.dropped));
  doc.add_metadata("slope_tkrr", csv::format_double(result.slope_tkrr));
  doc.add_metadata("slope_full", csv::format_double(result.slope_full));
  doc.add_metadata("rate_exponent_tkrr",
                   csv::format_double(rate_exponent(result.gamma, result.alpha, EstimatorKind::Tkrr)));
  doc.add_metadata("rate_exponent_full",
                   csv::format_double(rate_exponent(result.gamma, result.alpha, EstimatorKind::FullKrr)));
  doc.set_header({"n", "r_tkrr", "min_mse_tkrr", "argmin_lambda_tkrr", "min_mse_full",
                  "argmin_lambda_full", "log_mse_gap"});
  for (std::size_t k = 0; k < result.n_grid.size(); ++k) {
    doc.add_row({std::to_string(result.n_grid[k]), std::to_string(result.r_tkrr[k]),
                 csv::format_double(result.min_mse_tkrr[k]),
                 csv::format_double(result.argmin_lambda_tkrr[k]),
                 csv::format_double(result.min_mse_full[k]),
                 csv::format_double(result.argmin_lambda_full[k]),
                 csv::format_double(std::log(result.min_mse_full[k]) - std::log(result.min_mse_tkrr[k]))});
  }
  doc.write(path);
}

GapTable log_mse_gap(std::span<const double> alphas, double gamma, std::span<const double> sigmas,
                     std::span<const std::size_t> n_grid, const LambdaGrid& grid,
                     const RateStudyOptions& options) {
  const std::vector<double> alpha_list = sorted_unique(alphas, "alpha list");
  const std::vector<double> sigma_list = sorted_unique(sigmas, "sigma list");
  GapTable table;
  table.gamma = gamma;
  for (const double alpha : alpha_list) {
    for (const double sigma : sigma_list) {
      const RateStudyResult study = rate_study(alpha, gamma, n_grid, sigma, grid, options);
      for (std::size_t k = 0; k < study.n_grid.size(); ++k) {
        table.rows.push_back(GapRow{alpha, sigma, study.n_grid[k], study.min_mse_full[k],
                                    study.min_mse_tkrr[k],
                                    std::log(study.min_mse_full[k]) - std::log(study.min_mse_tkrr[k])});
      }
    }
  }
  return table;
}

void write_gap_csv(const std::filesystem::path& path, const GapTable& table,
                   const csv::Metadata& metadata) {
  csv::Document doc;
  doc.add_metadata(metadata);
  doc.add_metadata("gamma", csv::format_double(table.gamma));
  doc.set_header({"alpha", "sigma", "n", "min_mse_full", "min_mse_tkrr", "log_mse_gap"});
  for (const GapRow& row : table.rows) {
    doc.add_row({csv::format_double(row.alpha), csv::format_double(row.sigma), std::to_string(row.n),
                 csv::format_double(row.min_mse_full), csv::format_double(row.min_mse_tkrr),
                 csv::format_double(row.log_gap)});
  }
  doc.write(path);
}

}  // namespace tkrr
