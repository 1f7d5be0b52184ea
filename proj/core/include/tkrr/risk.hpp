#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tkrr/spectral.hpp"

namespace tkrr {

/// Expected empirical MSE of a TKRR fit, split into its three sources.
struct MseReport {
  double bias_reg = 0.0;   // sum_{i<=r} lambda^2 xi_i^2 / (mu_i + lambda)^2
  double bias_tail = 0.0;  // sum_{i>r} xi_i^2
  double variance = 0.0;   // (sigma^2/n) sum_{i<=r} mu_i^2 / (mu_i + lambda)^2
  double total = 0.0;
  double lambda = 0.0;
  std::size_t r = 0;
  double noise_sigma = 0.0;
  std::size_t n = 0;
};

/// Closed-form expected MSE for eigenvalues `mu`, alignment scores `xi`,
/// truncation r, ridge lambda and noise level sigma with n samples.
///
/// lambda = 0 is allowed as long as mu_1..mu_r are positive; otherwise
/// DegeneracyError. `n` is the sample size entering sigma^2/n and need not
/// equal mu.size() (it does for every caller in this library).
MseReport exact_mse(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi, std::size_t r,
                    double lambda, double sigma, std::size_t n);

/// Same, taking squared scores directly (polynomial spectra are defined by xi^2).
MseReport exact_mse_from_squares(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi_sq,
                                 std::size_t r, double lambda, double sigma, std::size_t n);

/// The same expectation written as
///   |xi|^2 + sum_{i<=r} [-a_i(lambda) xi_i^2 + (sigma^2/n) mu_i^2] / (mu_i + lambda)^2,
/// a_i(lambda) = (mu_i + lambda)^2 - lambda^2. Kept as an independent route
/// for cross-checking exact_mse.
double exact_mse_expanded(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi_sq, std::size_t r,
                          double lambda, double sigma, std::size_t n);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

/// Averages |Gamma (xi + z) - xi|^2 over z ~ N(0, sigma^2/n I) in the
/// eigenbasis.
MonteCarloEstimate monte_carlo_mse(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi,
                                   std::size_t r, double lambda, double sigma, std::size_t n,
                                   std::size_t trials, std::uint64_t seed);

/// Simulates in observation space: y = f* + w with f* = sqrt(n) U xi and
/// w ~ N(0, sigma^2 I_n), applies the TKRR smoother y -> U Gamma U^T y (the
/// fitted values of `fit`) and averages |f_hat - f*|_n^2. Trials run in
/// batches of 1024 so the smoother is applied as one matrix product.
MonteCarloEstimate monte_carlo_mse(const EigenSystem& eigen, const Eigen::VectorXd& xi,
                                   std::size_t r, double lambda, double sigma,
                                   std::size_t trials, std::uint64_t seed);

/// Bayes risk under the bandlimited prior with band (b, ell):
///   1 - (1/b) sum_{i=ell+1}^{min(ell+b, r)} a_i / (mu_i + lambda)^2
///     + (sigma^2/n) sum_{i<=r} mu_i^2 / (mu_i + lambda)^2.
double bayes_mse_bandlimited(const Eigen::VectorXd& mu, std::size_t b, std::size_t ell,
                             std::size_t r, double lambda, double sigma, std::size_t n);

/// Smallest 1-based index i in [ell+1, ell+b] with 1 + 2 lambda/mu_i > (sigma^2/n) b,
/// or nullopt when no index in the band qualifies.
std::optional<std::size_t> jstar(const Eigen::VectorXd& mu, std::size_t b, std::size_t ell,
                                 double lambda, double sigma, std::size_t n);

/// Three-term rate surrogate with eta = min(r, lambda^(-1/alpha)):
///   lambda^2 max(1, eta^(-2(gamma-1)alpha)) + r^(-2 gamma alpha) 1{r<n} + (sigma^2/n) eta.
double surrogate_mse(double alpha, double gamma, std::size_t r, double lambda, double sigma,
                     std::size_t n);

enum class TruncationRounding { HalfUp, Floor };

/// Closed-form tuning for polynomial alignment (all hidden constants = 1).
struct RateParams {
  double alpha = 1.0;
  double gamma = 1.0;
  std::size_t n = 1;
  double sigma_sq = 1.0;
  double lambda_star = 0.0;  // (sigma^2/n)^(gamma alpha / (2 gamma alpha + 1))
  std::size_t r_star = 1;    // (n/sigma^2)^(1/(2 gamma alpha + 1)), rounded, clamped to [1, n]
  double r_star_exact = 1.0;
  double eta = 1.0;          // min(r_star, lambda_star^(-1/alpha))
  double delta = 1.0;        // min(1, gamma)
  double lambda_full = 0.0;  // (sigma^2/n)^(alpha / (2 delta alpha + 1))
};

RateParams optimal_params(double alpha, double gamma, std::size_t n, double sigma_sq,
                          TruncationRounding rounding = TruncationRounding::HalfUp);

enum class EstimatorKind { Tkrr, FullKrr };

/// s(gamma) = 2 gamma alpha / (2 gamma alpha + 1) for TKRR; full KRR saturates
/// at s(min(1, gamma)).
double rate_exponent(double gamma, double alpha, EstimatorKind kind);

/// Column names of the single-row MSE CSV.
std::vector<std::string> mse_report_header();
std::vector<std::string> mse_report_row(const MseReport& report);

}  // namespace tkrr
