#pragma once

#include <cstddef>
#include <filesystem>
#include <span>

#include <Eigen/Dense>

#include "tkrr/csv.hpp"
#include "tkrr/kernel.hpp"
#include "tkrr/spectral.hpp"

namespace tkrr {

/// Truncation level and ridge penalty. r = n is ordinary (full) KRR.
struct TkrrConfig {
  std::size_t r = 1;
  double lambda = 0.0;

  static TkrrConfig full_krr(std::size_t n, double lambda) { return TkrrConfig{n, lambda}; }
};

/// omega = U_1 A^-1 xi_(1) + U_2 beta with A = Lambda_1 + lambda I.
struct RepresenterWeights {
  Eigen::VectorXd omega;
  Eigen::VectorXd beta_component;  // length n - r, zero by default
};

struct FittedModel {
  Eigen::VectorXd fitted_spectral;  // Gamma_lambda xi, xi = U^T y / sqrt(n)
  Eigen::VectorXd fitted_values;    // sqrt(n) U fitted_spectral
  RepresenterWeights weights;
  TkrrConfig config;
};

/// Closed-form TKRR fit in the eigenbasis of K, returning the minimum-norm
/// representer (beta = 0). Throws DegeneracyError when lambda = 0 and one of
/// the first r eigenvalues is zero.
FittedModel fit(const EigenSystem& eigen, const Eigen::VectorXd& y, TkrrConfig cfg);

/// Same fit with an explicit null-space component beta in span(u_{r+1}..u_n).
/// The fitted values do not depend on beta.
FittedModel fit_with_null_component(const EigenSystem& eigen, const Eigen::VectorXd& y,
                                    TkrrConfig cfg, const Eigen::VectorXd& beta);

/// f~(x) = (1/sqrt(n)) sum_j omega_j K~(x, x_j), with K~ evaluated through
/// the interpolating basis psi_1..psi_r.
double predict(const FittedModel& model, const EigenSystem& eigen, const Covariates& x,
               const KernelSpec& spec, std::span<const double> x_new);

/// (1/n) sum_i (f_hat_i - f_star_i)^2.
double empirical_mse(const Eigen::VectorXd& f_hat_values, const Eigen::VectorXd& f_star_values);

/// Columns: index, omega, fitted_value, fitted_spectral.
void write_fitted_model_csv(const std::filesystem::path& path, const FittedModel& model,
                            const csv::Metadata& metadata);

}  // namespace tkrr
