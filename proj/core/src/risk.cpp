#include "tkrr/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tkrr/csv.hpp"
#include "tkrr/errors.hpp"
#include "tkrr/random.hpp"

namespace tkrr {

namespace {

/// Neumaier compensated accumulator; the grids sum tens of thousands of
/// terms of very different magnitude.
class Accumulator {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class Welford {
 public:
  void add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }
  [[nodiscard]] MonteCarloEstimate result() const {
    MonteCarloEstimate out;
    out.trials = count_;
    out.estimate = mean_;
    if (count_ > 1) {
      const double var = m2_ / static_cast<double>(count_ - 1);
      out.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(count_));
    }
    return out;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

void check_common(const Eigen::VectorXd& mu, std::size_t r, double lambda, double sigma,
                  std::size_t n) {
  const auto m = static_cast<std::size_t>(mu.size());
  if (m == 0) throw InvalidArgument("eigenvalue vector is empty");
  if (r < 1 || r > m) throw InvalidArgument("truncation level r must satisfy 1 <= r <= n");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be finite and >= 0");
  if (n == 0) throw InvalidArgument("sample size n must be >= 1");
  if (lambda == 0.0) {
    for (std::size_t i = 0; i < r; ++i) {
      if (!(mu(static_cast<Eigen::Index>(i)) > 0.0)) {
        throw DegeneracyError("lambda = 0 requires positive eigenvalues on the kept modes; mode " +
                              std::to_string(i + 1) + " is zero");
      }
    }
  }
}

}  // namespace

MseReport exact_mse_from_squares(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi_sq,
                                 std::size_t r, double lambda, double sigma, std::size_t n) {
  if (mu.size() != xi_sq.size()) throw InvalidArgument("mu and xi differ in length");
  check_common(mu, r, lambda, sigma, n);
  const double noise = sigma * sigma / static_cast<double>(n);
  Accumulator bias_reg;
  Accumulator bias_tail;
  Accumulator var_sum;
  const Eigen::Index kept = static_cast<Eigen::Index>(r);
  for (Eigen::Index i = 0; i < kept; ++i) {
    const double denom = mu(i) + lambda;
    const double shrink = lambda / denom;
    const double pass = mu(i) / denom;
    bias_reg.add(shrink * shrink * xi_sq(i));
    var_sum.add(pass * pass);
  }
  for (Eigen::Index i = kept; i < mu.size(); ++i) bias_tail.add(xi_sq(i));

  MseReport report;
  report.bias_reg = bias_reg.value();
  report.bias_tail = bias_tail.value();
  report.variance = noise * var_sum.value();
  report.total = report.bias_reg + report.bias_tail + report.variance;
  report.lambda = lambda;
  report.r = r;
  report.noise_sigma = sigma;
  report.n = n;
  return report;
}

MseReport exact_mse(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi, std::size_t r,
                    double lambda, double sigma, std::size_t n) {
  if (mu.size() != xi.size()) throw InvalidArgument("mu and xi differ in length");
  return exact_mse_from_squares(mu, xi.cwiseAbs2(), r, lambda, sigma, n);
}

double exact_mse_expanded(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi_sq, std::size_t r,
                          double lambda, double sigma, std::size_t n) {
  if (mu.size() != xi_sq.size()) throw InvalidArgument("mu and xi differ in length");
  check_common(mu, r, lambda, sigma, n);
  const double noise = sigma * sigma / static_cast<double>(n);
  Accumulator total;
  for (Eigen::Index i = 0; i < xi_sq.size(); ++i) total.add(xi_sq(i));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(r); ++i) {
    const double denom = mu(i) + lambda;
    const double a = denom * denom - lambda * lambda;
    total.add((-a * xi_sq(i) + noise * mu(i) * mu(i)) / (denom * denom));
  }
  return total.value();
}

MonteCarloEstimate monte_carlo_mse(const Eigen::VectorXd& mu, const Eigen::VectorXd& xi,
                                   std::size_t r, double lambda, double sigma, std::size_t n,
                                   std::size_t trials, std::uint64_t seed) {
  if (mu.size() != xi.size()) throw InvalidArgument("mu and xi differ in length");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  check_common(mu, r, lambda, sigma, n);
  const SpectralFilter filter = spectral_filter(mu, lambda, r);
  const double noise_sd = sigma / std::sqrt(static_cast<double>(n));
  Rng rng(seed);
  Welford stats;
  for (std::size_t t = 0; t < trials; ++t) {
    double err = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      const double observed = xi(i) + noise_sd * rng.normal();
      const double diff = filter.values(i) * observed - xi(i);
      err += diff * diff;
    }
    stats.add(err);
  }
  return stats.result();
}

MonteCarloEstimate monte_carlo_mse(const EigenSystem& eigen, const Eigen::VectorXd& xi,
                                   std::size_t r, double lambda, double sigma,
                                   std::size_t trials, std::uint64_t seed) {
  const std::size_t n = eigen.n();
  if (static_cast<std::size_t>(xi.size()) != n) throw InvalidArgument("xi must have length n");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  check_common(eigen.mu(), r, lambda, sigma, n);

  const auto nn = static_cast<Eigen::Index>(n);
  const double root_n = std::sqrt(static_cast<double>(n));
  const Eigen::VectorXd f_star = root_n * (eigen.U() * xi);
  const SpectralFilter filter = spectral_filter(eigen, lambda, r);
  // Fitted values are linear in y: f_hat = H y with H = U Gamma U^T.
  const Eigen::MatrixXd hat = eigen.U() * filter.values.asDiagonal() * eigen.U().transpose();

  constexpr std::size_t kBatch = 1024;
  Rng rng(seed);
  Welford stats;
  Eigen::MatrixXd noise(nn, static_cast<Eigen::Index>(kBatch));
  for (std::size_t done = 0; done < trials; done += kBatch) {
    const auto cols = static_cast<Eigen::Index>(std::min(kBatch, trials - done));
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index i = 0; i < nn; ++i) noise(i, c) = sigma * rng.normal();
    }
    Eigen::MatrixXd y = noise.leftCols(cols);
    y.colwise() += f_star;
    const Eigen::MatrixXd f_hat = hat * y;
    for (Eigen::Index c = 0; c < cols; ++c) {
      stats.add((f_hat.col(c) - f_star).squaredNorm() / static_cast<double>(n));
    }
  }
  return stats.result();
}

double bayes_mse_bandlimited(const Eigen::VectorXd& mu, std::size_t b, std::size_t ell,
                             std::size_t r, double lambda, double sigma, std::size_t n) {
  const auto m = static_cast<std::size_t>(mu.size());
  if (b < 1) throw InvalidArgument("band width b must be >= 1");
  if (ell + b > m) throw InvalidArgument("band exceeds the spectrum: ell + b > n");
  check_common(mu, r, lambda, sigma, n);
  const double noise = sigma * sigma / static_cast<double>(n);
  Accumulator align;
  const std::size_t band_end = std::min(ell + b, r);
  for (std::size_t i = ell; i < band_end; ++i) {
    const double m_i = mu(static_cast<Eigen::Index>(i));
    const double denom = m_i + lambda;
    const double a = denom * denom - lambda * lambda;
    align.add(a / (denom * denom));
  }
  Accumulator var_sum;
  for (std::size_t i = 0; i < r; ++i) {
    const double pass = mu(static_cast<Eigen::Index>(i)) / (mu(static_cast<Eigen::Index>(i)) + lambda);
    var_sum.add(pass * pass);
  }
  return 1.0 - align.value() / static_cast<double>(b) + noise * var_sum.value();
}

std::optional<std::size_t> jstar(const Eigen::VectorXd& mu, std::size_t b, std::size_t ell,
                                 double lambda, double sigma, std::size_t n) {
  if (b < 1) throw InvalidArgument("band width b must be >= 1");
  if (ell + b > static_cast<std::size_t>(mu.size())) throw InvalidArgument("band exceeds the spectrum");
  if (n == 0) throw InvalidArgument("sample size n must be >= 1");
  const double rhs = sigma * sigma / static_cast<double>(n) * static_cast<double>(b);
  for (std::size_t i = ell; i < ell + b; ++i) {
    const double m_i = mu(static_cast<Eigen::Index>(i));
    double lhs = 1.0;
    if (lambda > 0.0) lhs += m_i > 0.0 ? 2.0 * lambda / m_i : std::numeric_limits<double>::infinity();
    if (lhs > rhs) return i + 1;
  }
  return std::nullopt;
}

double surrogate_mse(double alpha, double gamma, std::size_t r, double lambda, double sigma,
                     std::size_t n) {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be > 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("surrogate_mse needs lambda > 0 (lambda^(-1/alpha) is undefined at 0)");
  }
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be >= 0");
  if (n == 0 || r < 1 || r > n) throw InvalidArgument("truncation level r must satisfy 1 <= r <= n");
  const double rr = static_cast<double>(r);
  const double eta = std::min(rr, std::pow(lambda, -1.0 / alpha));
  const double reg = lambda * lambda * std::max(1.0, std::pow(eta, -2.0 * (gamma - 1.0) * alpha));
  const double tail = r < n ? std::pow(rr, -2.0 * gamma * alpha) : 0.0;
  return reg + tail + sigma * sigma / static_cast<double>(n) * eta;
}

RateParams optimal_params(double alpha, double gamma, std::size_t n, double sigma_sq,
                          TruncationRounding rounding) {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be > 0");
  if (n == 0) throw InvalidArgument("n must be >= 1");
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) throw InvalidArgument("sigma^2 must be > 0");

  RateParams p;
  p.alpha = alpha;
  p.gamma = gamma;
  p.n = n;
  p.sigma_sq = sigma_sq;
  const double nd = static_cast<double>(n);
  const double ga = gamma * alpha;
  p.lambda_star = std::pow(sigma_sq / nd, ga / (2.0 * ga + 1.0));
  p.r_star_exact = std::pow(nd / sigma_sq, 1.0 / (2.0 * ga + 1.0));
  const double rounded = rounding == TruncationRounding::HalfUp ? std::floor(p.r_star_exact + 0.5)
                                                                : std::floor(p.r_star_exact);
  p.r_star = static_cast<std::size_t>(std::clamp(rounded, 1.0, nd));
  p.eta = std::min(static_cast<double>(p.r_star), std::pow(p.lambda_star, -1.0 / alpha));
  p.delta = std::min(1.0, gamma);
  p.lambda_full = std::pow(sigma_sq / nd, alpha / (2.0 * p.delta * alpha + 1.0));
  return p;
}

double rate_exponent(double gamma, double alpha, EstimatorKind kind) {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be >= 1");
  if (!(gamma > 0.0) || std::isnan(gamma)) throw InvalidArgument("gamma must be > 0");
  const double g = kind == EstimatorKind::Tkrr ? gamma : std::min(1.0, gamma);
  if (std::isinf(g)) return 1.0;
  return 2.0 * g * alpha / (2.0 * g * alpha + 1.0);
}

std::vector<std::string> mse_report_header() {
  return {"lambda", "r", "sigma", "n", "bias_reg", "bias_tail", "variance", "total"};
}

std::vector<std::string> mse_report_row(const MseReport& report) {
  return {csv::format_double(report.lambda), std::to_string(report.r),
          csv::format_double(report.noise_sigma), std::to_string(report.n),
          csv::format_double(report.bias_reg), csv::format_double(report.bias_tail),
          csv::format_double(report.variance), csv::format_double(report.total)};
}

}  // namespace tkrr
