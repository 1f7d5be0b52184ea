#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tkrr/csv.hpp"
#include "tkrr/risk.hpp"

namespace tkrr {

/// `points` values evenly spaced in log10 between `min` and `max` inclusive.
struct LambdaGrid {
  double min = 1e-10;
  double max = 1e2;
  std::size_t points = 1000;

  [[nodiscard]] std::vector<double> values() const;
  [[nodiscard]] std::string describe() const;
};

std::vector<double> log_grid(double min, double max, std::size_t points);

enum class CurveAxis { Lambda, Truncation };

struct CurveRow {
  double sweep_value = 0.0;  // lambda or r
  double sigma_key = 0.0;    // sigma (lambda curves) or sigma/sqrt(n) (r curves)
  double bias_reg = 0.0;
  double bias_tail = 0.0;
  double variance = 0.0;
  double total = 0.0;
};

/// Expected-MSE regularization curve, rows sorted by (sigma_key, sweep_value).
struct CurveTable {
  CurveAxis axis = CurveAxis::Lambda;
  std::vector<CurveRow> rows;
};

/// One exact_mse evaluation per (sigma, lambda) at fixed r. The lambda grid
/// must be strictly increasing.
CurveTable lambda_curve(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi, std::size_t r,
                        std::span<const double> lambda_grid, std::span<const double> sigmas,
                        std::size_t n, unsigned threads = 1);

/// One exact_mse evaluation per (sigma/sqrt(n), r) at fixed lambda.
CurveTable r_curve(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi, double lambda,
                   std::span<const std::size_t> r_range, std::span<const double> sigma_over_sqrtn,
                   std::size_t n, unsigned threads = 1);

void write_curve_csv(const std::filesystem::path& path, const CurveTable& table,
                     const csv::Metadata& metadata);

enum class SurfaceAxisKind { Lambda, Truncation, Sigma, SigmaOverSqrtN };

struct SurfaceAxis {
  SurfaceAxisKind kind = SurfaceAxisKind::Lambda;
  std::vector<double> values;
};

/// Values used for whichever parameters are not swept.
struct SurfaceParams {
  double lambda = 0.0;
  std::size_t r = 1;
  double sigma = 0.0;
  std::size_t n = 1;
};

/// Dense grid of expected-MSE totals; totals(i, j) belongs to
/// (axis1.values[i], axis2.values[j]).
struct SurfaceGrid {
  SurfaceAxis axis1;
  SurfaceAxis axis2;
  Eigen::MatrixXd totals;
};

SurfaceGrid surface(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi, const SurfaceAxis& axis1,
                    const SurfaceAxis& axis2, const SurfaceParams& fixed, unsigned threads = 1);

std::string axis_name(SurfaceAxisKind kind);

/// Row-major: header `<axis1>,<axis2>=v...`, then one row per axis1 value.
void write_surface_csv(const std::filesystem::path& path, const SurfaceGrid& grid,
                       const csv::Metadata& metadata);

struct GridMinimum {
  double mse = 0.0;
  double lambda = 0.0;
};

/// Minimum of exact_mse over `lambdas`; ties resolve to the smallest lambda.
GridMinimum minimize_over_lambda(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi_sq,
                                 std::size_t r, std::span<const double> lambdas, double sigma,
                                 std::size_t n);

struct RateStudyOptions {
  /// Smallest sample sizes left out of the slope fit.
  std::size_t drop_smallest = 0;
  TruncationRounding rounding = TruncationRounding::Floor;
  unsigned threads = 1;
};

struct RateStudyResult {
  double alpha = 1.0;
  double gamma = 1.0;
  double sigma = 1.0;
  LambdaGrid lambda_grid;
  std::vector<std::size_t> n_grid;
  std::vector<std::size_t> r_tkrr;
  std::vector<double> min_mse_tkrr;
  std::vector<double> min_mse_full;
  std::vector<double> argmin_lambda_tkrr;
  std::vector<double> argmin_lambda_full;
  double slope_tkrr = 0.0;
  double slope_full = 0.0;
  std::size_t dropped = 0;
};

/// For each n: synthetic polynomial spectra, TKRR at the closed-form r* and
/// full KRR (r = n), each minimized over the lambda grid; then OLS slopes of
/// log(min MSE) against log(n).
RateStudyResult rate_study(double alpha, double gamma, std::span<const std::size_t> n_grid,
                           double sigma, const LambdaGrid& grid, const RateStudyOptions& options = {});

void write_rate_study_csv(const std::filesystem::path& path, const RateStudyResult& result,
                          const csv::Metadata& metadata);

struct GapRow {
  double alpha = 1.0;
  double sigma = 1.0;
  std::size_t n = 1;
  double min_mse_full = 0.0;
  double min_mse_tkrr = 0.0;
  double log_gap = 0.0;  // log(min_mse_full) - log(min_mse_tkrr)
};

struct GapTable {
  double gamma = 1.0;
  std::vector<GapRow> rows;  // sorted by (alpha, sigma, n)
};

GapTable log_mse_gap(std::span<const double> alphas, double gamma, std::span<const double> sigmas,
                     std::span<const std::size_t> n_grid, const LambdaGrid& grid,
                     const RateStudyOptions& options = {});

void write_gap_csv(const std::filesystem::path& path, const GapTable& table,
                   const csv::Metadata& metadata);

/// Ordinary least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace tkrr
