#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "oracles.hpp"
#include "tkrr/alignment.hpp"
#include "tkrr/csv.hpp"
#include "tkrr/errors.hpp"
#include "tkrr/experiments.hpp"
#include "tkrr/risk.hpp"

using namespace tkrr;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

const std::vector<std::size_t> kNGrid{256, 512, 1024, 2048, 4096, 8192, 16384};

}  // namespace

TEST(LogGrid, EndpointsAndSpacing) {
  const std::vector<double> g = log_grid(1e-3, 10.0, 5);
  ASSERT_EQ(g.size(), 5U);
  EXPECT_EQ(g.front(), 1e-3);
  EXPECT_EQ(g.back(), 10.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(std::log10(g[i] / g[i - 1]), 1.0, 1e-14);
  EXPECT_EQ(log_grid(2.0, 2.0, 1), std::vector<double>{2.0});
  EXPECT_THROW(log_grid(1.0, 10.0, 0), InvalidArgument);
  EXPECT_THROW(log_grid(0.0, 10.0, 3), InvalidArgument);
  EXPECT_THROW(log_grid(10.0, 1.0, 3), InvalidArgument);
  const LambdaGrid lg{1e-10, 1e2, 1000};
  EXPECT_EQ(lg.values().size(), 1000U);
  EXPECT_FALSE(lg.describe().empty());
}

TEST(LambdaCurve, EveryCellIsAnIndependentExactMse) {
  const AlignmentSpectrum a = bandlimited_spectrum(80, 10, 5, 3);
  const SyntheticSpectra s = polynomial_spectra(80, 1.0, 1.0);
  const std::vector<double> lambdas = log_grid(1e-6, 1.0, 13);
  const std::vector<double> sigmas{0.5, 0.0, 0.2, 0.5};
  const CurveTable t = lambda_curve(s.mu, a.xi, 40, lambdas, sigmas, 80, 3);
  EXPECT_EQ(t.axis, CurveAxis::Lambda);
  ASSERT_EQ(t.rows.size(), 3U * 13U);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const CurveRow& row = t.rows[i];
    EXPECT_NEAR(row.total, oracle::mse_filter_form(s.mu, a.xi, 40, row.sweep_value, row.sigma_key, 80), 1e-13);
    EXPECT_EQ(row.total, exact_mse(s.mu, a.xi, 40, row.sweep_value, row.sigma_key, 80).total);
    if (i > 0) {
      const CurveRow& prev = t.rows[i - 1];
      EXPECT_TRUE(prev.sigma_key < row.sigma_key || (prev.sigma_key == row.sigma_key && prev.sweep_value < row.sweep_value));
    }
  }
  const std::vector<double> unsorted{1.0, 0.1};
  EXPECT_THROW(lambda_curve(s.mu, a.xi, 40, unsorted, sigmas, 80), InvalidArgument);
}

TEST(RCurve, RowsUseSigmaScaledBySqrtN) {
  const AlignmentSpectrum a = bandlimited_spectrum(100, 10, 10, 4);
  const SyntheticSpectra s = polynomial_spectra(100, 1.0, 1.0);
  const std::vector<std::size_t> rs{50, 1, 10, 100, 10};
  const std::vector<double> keys{0.05, 0.0};
  const CurveTable t = r_curve(s.mu, a.xi, 1e-6, rs, keys, 100, 2);
  EXPECT_EQ(t.axis, CurveAxis::Truncation);
  ASSERT_EQ(t.rows.size(), 8U);
  EXPECT_EQ(t.rows.front().sigma_key, 0.0);
  EXPECT_EQ(t.rows.front().sweep_value, 1.0);
  for (const CurveRow& row : t.rows) {
    const auto r = static_cast<std::size_t>(row.sweep_value);
    EXPECT_EQ(row.total, exact_mse(s.mu, a.xi, r, 1e-6, row.sigma_key * 10.0, 100).total);
  }
  const std::vector<std::size_t> bad{0};
  EXPECT_THROW(r_curve(s.mu, a.xi, 1e-6, bad, keys, 100), InvalidArgument);
  const std::vector<std::size_t> too_big{101};
  EXPECT_THROW(r_curve(s.mu, a.xi, 1e-6, too_big, keys, 100), InvalidArgument);
}

TEST(CurveCsv, ColumnsForBothAxes) {
  const SyntheticSpectra s = polynomial_spectra(20, 1.0, 1.0);
  const Eigen::VectorXd xi = s.xi();
  const auto dir = fresh_dir("tkrr_curve_csv");
  const std::vector<double> lambdas{0.01, 0.1};
  const std::vector<double> sigmas{1.0};
  write_curve_csv(dir / "l.csv", lambda_curve(s.mu, xi, 5, lambdas, sigmas, 20), {});
  const csv::Table l = csv::read(dir / "l.csv");
  EXPECT_EQ(l.rows.at(0), (std::vector<std::string>{"lambda", "sigma", "bias_reg", "bias_tail", "variance", "total"}));
  EXPECT_EQ(l.rows.size(), 3U);
  ASSERT_NE(l.find_metadata("axis"), nullptr);

  const std::vector<std::size_t> rs{3, 7};
  write_curve_csv(dir / "r.csv", r_curve(s.mu, xi, 0.01, rs, sigmas, 20), {{"k", "v"}});
  const csv::Table r = csv::read(dir / "r.csv");
  EXPECT_EQ(r.rows.at(0),
            (std::vector<std::string>{"r", "sigma_over_sqrtn", "bias_reg", "bias_tail", "variance", "total"}));
  EXPECT_EQ(r.rows.at(1).at(0), "3");
  EXPECT_EQ(*r.find_metadata("k"), "v");
  std::filesystem::remove_all(dir);
}

TEST(Surface, CellsMatchExactMse) {
  const SyntheticSpectra s = polynomial_spectra(50, 1.0, 0.8);
  const Eigen::VectorXd xi = s.xi();
  const SurfaceAxis lambdas{SurfaceAxisKind::Lambda, log_grid(1e-4, 1.0, 5)};
  const SurfaceAxis rs{SurfaceAxisKind::Truncation, {1.0, 10.0, 50.0}};
  const SurfaceParams fixed{0.0, 1, 0.7, 50};
  const SurfaceGrid g = surface(s.mu, xi, lambdas, rs, fixed, 2);
  ASSERT_EQ(g.totals.rows(), 5);
  ASSERT_EQ(g.totals.cols(), 3);
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      const auto r = static_cast<std::size_t>(rs.values[static_cast<std::size_t>(j)]);
      EXPECT_EQ(g.totals(i, j), exact_mse(s.mu, xi, r, lambdas.values[static_cast<std::size_t>(i)], 0.7, 50).total);
    }
  }
  const SurfaceAxis keys{SurfaceAxisKind::SigmaOverSqrtN, {0.1}};
  const SurfaceGrid one = surface(s.mu, xi, keys, SurfaceAxis{SurfaceAxisKind::Lambda, {0.01}}, SurfaceParams{0.0, 20, 0.0, 50});
  EXPECT_EQ(one.totals(0, 0), exact_mse(s.mu, xi, 20, 0.01, 0.1 * std::sqrt(50.0), 50).total);
}

TEST(Surface, Validation) {
  const SyntheticSpectra s = polynomial_spectra(10, 1.0, 1.0);
  const Eigen::VectorXd xi = s.xi();
  const SurfaceParams fixed{0.1, 5, 1.0, 10};
  const SurfaceAxis l{SurfaceAxisKind::Lambda, {0.1}};
  const SurfaceAxis sg{SurfaceAxisKind::Sigma, {1.0}};
  const SurfaceAxis sk{SurfaceAxisKind::SigmaOverSqrtN, {0.1}};
  EXPECT_THROW(surface(s.mu, xi, l, l, fixed), InvalidArgument);
  EXPECT_THROW(surface(s.mu, xi, sg, sk, fixed), InvalidArgument);
  EXPECT_THROW(surface(s.mu, xi, SurfaceAxis{SurfaceAxisKind::Truncation, {2.5}}, l, fixed), InvalidArgument);
  EXPECT_THROW(surface(s.mu, xi, SurfaceAxis{SurfaceAxisKind::Truncation, {0.0}}, l, fixed), InvalidArgument);
  EXPECT_THROW(surface(s.mu, xi, SurfaceAxis{SurfaceAxisKind::Lambda, {}}, sg, fixed), InvalidArgument);
}

TEST(SurfaceCsv, Layout) {
  const SyntheticSpectra s = polynomial_spectra(10, 1.0, 1.0);
  const SurfaceGrid g = surface(s.mu, s.xi(), SurfaceAxis{SurfaceAxisKind::Truncation, {2.0, 4.0}},
                                SurfaceAxis{SurfaceAxisKind::Lambda, {0.01, 0.1, 1.0}}, SurfaceParams{0.0, 1, 1.0, 10});
  const auto dir = fresh_dir("tkrr_surface_csv");
  write_surface_csv(dir / "s.csv", g, {});
  const csv::Table t = csv::read(dir / "s.csv");
  ASSERT_EQ(t.rows.size(), 3U);
  ASSERT_EQ(t.rows[0].size(), 4U);
  EXPECT_EQ(t.rows[0][0], "r");
  EXPECT_EQ(t.rows[0][1].rfind("lambda=", 0), 0U);
  EXPECT_EQ(csv::parse_double(t.rows[2][3]), g.totals(1, 2));
  EXPECT_EQ(*t.find_metadata("axis1"), "r");
  EXPECT_EQ(*t.find_metadata("axis2"), "lambda");
  EXPECT_EQ(axis_name(SurfaceAxisKind::SigmaOverSqrtN), "sigma_over_sqrtn");
  std::filesystem::remove_all(dir);
}

TEST(MinimizeOverLambda, MatchesBruteForceAndBreaksTiesLow) {
  const SyntheticSpectra s = polynomial_spectra(200, 1.0, 1.0);
  const std::vector<double> lambdas = log_grid(1e-8, 10.0, 200);
  const GridMinimum m = minimize_over_lambda(s.mu, s.xi_sq, 30, lambdas, 1.0, 200);
  double best = INFINITY;
  double arg = 0.0;
  for (const double l : lambdas) {
    const double v = exact_mse_from_squares(s.mu, s.xi_sq, 30, l, 1.0, 200).total;
    if (v < best) {
      best = v;
      arg = l;
    }
  }
  EXPECT_EQ(m.mse, best);
  EXPECT_EQ(m.lambda, arg);

  // Zero signal and zero noise: every lambda gives 0, the smallest wins.
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(200);
  EXPECT_EQ(minimize_over_lambda(s.mu, zero, 30, lambdas, 0.0, 200).lambda, lambdas.front());
}

TEST(OlsSlope, MatchesQrOracle) {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.5, 7.0};
  const std::vector<double> y{1.0, 2.9, 5.2, 8.1, 14.7};
  EXPECT_NEAR(ols_slope(x, y), oracle::ls_slope(x, y), 1e-13);
  const std::vector<double> line{3.0, 1.0, -1.0};
  EXPECT_NEAR(ols_slope(std::vector<double>{0.0, 1.0, 2.0}, line), -2.0, 1e-15);
  EXPECT_THROW(ols_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidArgument);
  EXPECT_THROW(ols_slope(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 2.0}), InvalidArgument);
}

TEST(RateStudy, PerNMinimaAndSlopes) {
  const LambdaGrid grid{1e-10, 1e2, 400};
  const RateStudyResult res = rate_study(1.0, 1.0, kNGrid, 1.0, grid, RateStudyOptions{0, TruncationRounding::Floor, 4});
  ASSERT_EQ(res.n_grid.size(), kNGrid.size());
  std::vector<double> log_n;
  std::vector<double> log_t;
  for (std::size_t i = 0; i < kNGrid.size(); ++i) {
    const std::size_t n = kNGrid[i];
    const SyntheticSpectra s = polynomial_spectra(n, 1.0, 1.0);
    const RateParams p = optimal_params(1.0, 1.0, n, 1.0, TruncationRounding::Floor);
    EXPECT_EQ(res.r_tkrr[i], p.r_star);
    EXPECT_EQ(res.min_mse_tkrr[i], minimize_over_lambda(s.mu, s.xi_sq, p.r_star, grid.values(), 1.0, n).mse);
    // The grid minimum can only improve on the closed-form lambda when the grid contains it.
    EXPECT_LE(res.min_mse_full[i], exact_mse_from_squares(s.mu, s.xi_sq, n, res.argmin_lambda_full[i], 1.0, n).total);
    EXPECT_GT(res.min_mse_tkrr[i], 0.0);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_t.push_back(std::log(res.min_mse_tkrr[i]));
  }
  EXPECT_NEAR(res.slope_tkrr, oracle::ls_slope(log_n, log_t), 1e-12);
  EXPECT_LT(res.slope_tkrr, 0.0);
  EXPECT_LT(res.slope_full, 0.0);
}

TEST(RateStudy, SlopesStableUnderGridRefinement) {
  const RateStudyOptions opts{0, TruncationRounding::Floor, 4};
  const RateStudyResult coarse = rate_study(1.0, 2.0, kNGrid, 1.0, LambdaGrid{1e-10, 1e2, 1000}, opts);
  const RateStudyResult fine = rate_study(1.0, 2.0, kNGrid, 1.0, LambdaGrid{1e-10, 1e2, 2000}, opts);
  EXPECT_NEAR(coarse.slope_tkrr, fine.slope_tkrr, 0.01);
  EXPECT_NEAR(coarse.slope_full, fine.slope_full, 0.01);
}

TEST(RateStudy, DropSmallestValidation) {
  const LambdaGrid grid{1e-6, 1.0, 20};
  const std::vector<std::size_t> three{64, 128, 256};
  EXPECT_NO_THROW(rate_study(1.0, 1.0, three, 1.0, grid, RateStudyOptions{1}));
  EXPECT_THROW(rate_study(1.0, 1.0, three, 1.0, grid, RateStudyOptions{2}), InvalidArgument);
  const RateStudyResult r = rate_study(1.0, 1.0, three, 1.0, grid, RateStudyOptions{1});
  EXPECT_EQ(r.dropped, 1U);
}

TEST(RateStudyCsv, ColumnsAndMetadata) {
  const std::vector<std::size_t> ns{64, 128, 256};
  const RateStudyResult r = rate_study(1.0, 3.0, ns, 1.0, LambdaGrid{1e-8, 1.0, 50});
  const auto dir = fresh_dir("tkrr_rates_csv");
  write_rate_study_csv(dir / "rates.csv", r, {});
  const csv::Table t = csv::read(dir / "rates.csv");
  EXPECT_EQ(t.rows.at(0), (std::vector<std::string>{"n", "r_tkrr", "min_mse_tkrr", "argmin_lambda_tkrr", "min_mse_full",
                                                   "argmin_lambda_full", "log_mse_gap"}));
  EXPECT_EQ(t.rows.size(), 4U);
  for (const char* key : {"alpha", "gamma", "sigma", "lambda_grid", "slope_tkrr", "slope_full", "rate_exponent_tkrr",
                          "rate_exponent_full"}) {
    EXPECT_NE(t.find_metadata(key), nullptr) << key;
  }
  EXPECT_EQ(csv::parse_double(*t.find_metadata("slope_tkrr")), r.slope_tkrr);
  std::filesystem::remove_all(dir);
}

TEST(LogMseGap, CellsMatchRateStudy) {
  const std::vector<double> alphas{2.0, 1.0};
  const std::vector<double> sigmas{1.0, 0.5};
  const std::vector<std::size_t> ns{128, 256, 512};
  const LambdaGrid grid{1e-10, 1e2, 300};
  const GapTable g = log_mse_gap(alphas, 5.0, sigmas, ns, grid);
  ASSERT_EQ(g.rows.size(), 12U);
  EXPECT_EQ(g.rows.front().alpha, 1.0);
  EXPECT_EQ(g.rows.front().sigma, 0.5);
  const RateStudyResult ref = rate_study(2.0, 5.0, ns, 1.0, grid);
  for (std::size_t i = 0; i < 3; ++i) {
    const GapRow& row = g.rows[9 + i];
    EXPECT_EQ(row.alpha, 2.0);
    EXPECT_EQ(row.sigma, 1.0);
    EXPECT_EQ(row.min_mse_tkrr, ref.min_mse_tkrr[i]);
    EXPECT_EQ(row.min_mse_full, ref.min_mse_full[i]);
    EXPECT_NEAR(row.log_gap, std::log(row.min_mse_full) - std::log(row.min_mse_tkrr), 1e-15);
  }
}

TEST(LogMseGap, OverAlignedGapPositiveAndNondecreasingOverTopDecade) {
  const std::vector<double> alphas{1.0, 2.0};
  const std::vector<double> sigmas{0.5, 1.0};
  const GapTable g = log_mse_gap(alphas, 5.0, sigmas, kNGrid, LambdaGrid{1e-10, 1e2, 1000},
                                 RateStudyOptions{0, TruncationRounding::Floor, 4});
  ASSERT_EQ(g.rows.size(), 4U * kNGrid.size());
  const double top_decade_start = static_cast<double>(kNGrid.back()) / 10.0;
  for (std::size_t i = 0; i < g.rows.size(); ++i) {
    const GapRow& row = g.rows[i];
    if (static_cast<double>(row.n) < top_decade_start) continue;
    EXPECT_GT(row.log_gap, 0.0);
    const GapRow& prev = g.rows[i - 1];
    if (prev.alpha == row.alpha && prev.sigma == row.sigma && static_cast<double>(prev.n) >= top_decade_start) {
      EXPECT_GE(row.log_gap, prev.log_gap) << "alpha=" << row.alpha << " sigma=" << row.sigma << " n=" << row.n;
    }
  }
}

TEST(LogMseGap, BelowOneGapStaysFlat) {
  // Equal rates leave only a constant offset from the unit hidden constants.
  const std::vector<double> alphas{1.0, 2.0};
  const std::vector<double> sigmas{1.0};
  for (const double gamma : {0.5, 0.7}) {
    const GapTable g = log_mse_gap(alphas, gamma, sigmas, kNGrid, LambdaGrid{1e-10, 1e2, 1000},
                                   RateStudyOptions{0, TruncationRounding::Floor, 4});
    for (const double alpha : alphas) {
      std::vector<double> log_n;
      std::vector<double> gap;
      for (const GapRow& row : g.rows) {
        if (row.alpha != alpha) continue;
        EXPECT_LE(std::abs(row.log_gap), 0.5) << "gamma=" << gamma << " alpha=" << alpha << " n=" << row.n;
        log_n.push_back(std::log(static_cast<double>(row.n)));
        gap.push_back(row.log_gap);
      }
      EXPECT_LE(std::abs(oracle::ls_slope(log_n, gap)), 0.02) << "gamma=" << gamma << " alpha=" << alpha;
    }
  }
}

TEST(GapCsv, Columns) {
  const std::vector<double> alphas{1.0};
  const std::vector<double> sigmas{1.0};
  const std::vector<std::size_t> ns{64, 128};
  const GapTable g = log_mse_gap(alphas, 2.0, sigmas, ns, LambdaGrid{1e-8, 1.0, 40});
  const auto dir = fresh_dir("tkrr_gap_csv");
  write_gap_csv(dir / "gap.csv", g, {});
  const csv::Table t = csv::read(dir / "gap.csv");
  EXPECT_EQ(t.rows.at(0), (std::vector<std::string>{"alpha", "sigma", "n", "min_mse_full", "min_mse_tkrr", "log_mse_gap"}));
  EXPECT_EQ(t.rows.size(), 3U);
  std::filesystem::remove_all(dir);
}
