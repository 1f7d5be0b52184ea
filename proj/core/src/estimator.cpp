#include "tkrr/estimator.hpp"

#include <cmath>
#include <string>

#include "tkrr/errors.hpp"

namespace tkrr {

namespace {

void check_inputs(const EigenSystem& eigen, const Eigen::VectorXd& y, const TkrrConfig& cfg) {
  if (static_cast<std::size_t>(y.size()) != eigen.n()) {
    throw InvalidArgument("response vector has " + std::to_string(y.size()) +
                          " entries, expected n = " + std::to_string(eigen.n()));
  }
  if (cfg.r < 1 || cfg.r > eigen.n()) throw InvalidArgument("truncation level r must satisfy 1 <= r <= n");
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) {
    throw InvalidArgument("lambda must be finite and >= 0");
  }
}

}  // namespace

FittedModel fit_with_null_component(const EigenSystem& eigen, const Eigen::VectorXd& y,
                                    TkrrConfig cfg, const Eigen::VectorXd& beta) {
  check_inputs(eigen, y, cfg);
  const std::size_t n = eigen.n();
  const std::size_t r = cfg.r;
  if (static_cast<std::size_t>(beta.size()) != n - r) {
    throw InvalidArgument("null-space component must have n - r = " + std::to_string(n - r) + " entries");
  }
  const double root_n = std::sqrt(static_cast<double>(n));
  const SpectralFilter filter = spectral_filter(eigen, cfg.lambda, r);

  const Eigen::VectorXd xi = eigen.U().transpose() * y / root_n;
  const auto xi1 = xi.head(static_cast<Eigen::Index>(r));
  const Eigen::VectorXd alpha =
      (xi1.array() / (eigen.leading_values(r).array() + cfg.lambda)).matrix();

  FittedModel model;
  model.config = cfg;
  model.fitted_spectral = filter.values.cwiseProduct(xi);
  model.fitted_values = root_n * (eigen.U() * model.fitted_spectral);
  model.weights.omega = eigen.leading_vectors(r) * alpha;
  if (r < n) model.weights.omega += eigen.trailing_vectors(r) * beta;
  model.weights.beta_component = beta;
  return model;
}

FittedModel fit(const EigenSystem& eigen, const Eigen::VectorXd& y, TkrrConfig cfg) {
  check_inputs(eigen, y, cfg);
  return fit_with_null_component(eigen, y, cfg,
                                 Eigen::VectorXd::Zero(static_cast<Eigen::Index>(eigen.n() - cfg.r)));
}

double predict(const FittedModel& model, const EigenSystem& eigen, const Covariates& x,
               const KernelSpec& spec, std::span<const double> x_new) {
  const std::size_t n = eigen.n();
  const std::size_t r = model.config.r;
  if (static_cast<std::size_t>(model.weights.omega.size()) != n) {
    throw InvalidArgument("model was fitted on a different eigen system");
  }
  const double root_n = std::sqrt(static_cast<double>(n));
  // K~(x_new, x_j) = sqrt(n) sum_k mu_k psi_k(x_new) u_{kj}
  const Eigen::VectorXd psi = psi_values(eigen, x, spec, r, x_new);
  const Eigen::VectorXd ktilde_col =
      root_n * (eigen.leading_vectors(r) * eigen.leading_values(r).cwiseProduct(psi));
  return ktilde_col.dot(model.weights.omega) / root_n;
}

double empirical_mse(const Eigen::VectorXd& f_hat_values, const Eigen::VectorXd& f_star_values) {
  if (f_hat_values.size() != f_star_values.size()) {
    throw InvalidArgument("empirical_mse: vectors differ in length");
  }
  if (f_hat_values.size() == 0) throw InvalidArgument("empirical_mse: empty input");
  return (f_hat_values - f_star_values).squaredNorm() / static_cast<double>(f_hat_values.size());
}

void write_fitted_model_csv(const std::filesystem::path& path, const FittedModel& model,
                            const csv::Metadata& metadata) {
  csv::Document doc;
  doc.add_metadata(metadata);
  doc.add_metadata("lambda", csv::format_double(model.config.lambda));
  doc.add_metadata("r", std::to_string(model.config.r));
  doc.set_header({"index", "omega", "fitted_value", "fitted_spectral"});
  for (Eigen::Index i = 0; i < model.fitted_values.size(); ++i) {
    doc.add_row({std::to_string(i + 1), csv::format_double(model.weights.omega(i)),
                 csv::format_double(model.fitted_values(i)),
                 csv::format_double(model.fitted_spectral(i))});
  }
  doc.write(path);
}

}  // namespace tkrr
