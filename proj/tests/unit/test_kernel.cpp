#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "oracles.hpp"
#include "tkrr/csv.hpp"
#include "tkrr/errors.hpp"
#include "tkrr/kernel.hpp"
#include "tkrr/spectral.hpp"

using namespace tkrr;

namespace {

Covariates points(std::initializer_list<std::initializer_list<double>> rows) {
  Covariates::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (const double v : row) m(i, j++) = v;
    ++i;
  }
  return Covariates(m);
}

}  // namespace

TEST(Covariates, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(Covariates(Covariates::Matrix(0, 2)), InvalidArgument);
  EXPECT_THROW(Covariates(Covariates::Matrix(2, 0)), InvalidArgument);
  Covariates::Matrix bad = Covariates::Matrix::Zero(2, 2);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(Covariates{bad}, InvalidArgument);
}

TEST(SampleUniformCube, SinglePointInRange) {
  const Covariates x = sample_uniform_cube(1, 1, 3);
  ASSERT_EQ(x.n(), 1U);
  EXPECT_GE(x.point(0)[0], 0.0);
  EXPECT_LT(x.point(0)[0], 1.0);
}

TEST(SampleUniformCube, TwoHundredByFourAllInCube) {
  const Covariates x = sample_uniform_cube(200, 4, 11);
  EXPECT_EQ(x.n(), 200U);
  EXPECT_EQ(x.d(), 4U);
  EXPECT_GE(x.points().minCoeff(), 0.0);
  EXPECT_LT(x.points().maxCoeff(), 1.0);
}

TEST(SampleUniformCube, DeterministicPerSeed) {
  EXPECT_EQ(sample_uniform_cube(50, 3, 99).points(), sample_uniform_cube(50, 3, 99).points());
  EXPECT_NE(sample_uniform_cube(50, 3, 99).points(), sample_uniform_cube(50, 3, 100).points());
}

TEST(SampleUniformCube, RejectsZeroSizes) {
  EXPECT_THROW(sample_uniform_cube(0, 2, 1), InvalidArgument);
  EXPECT_THROW(sample_uniform_cube(2, 0, 1), InvalidArgument);
}

TEST(KernelEval, HandExamples) {
  const KernelSpec spec = KernelSpec::gaussian(1.0);
  const std::vector<double> x{0.3, -1.2};
  EXPECT_DOUBLE_EQ(kernel_eval(spec, x, x), 1.0);
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> b{1.0, 1.0};  // squared distance 2
  EXPECT_NEAR(kernel_eval(spec, a, b), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(kernel_eval(spec, a, b), 0.36787944117144233, 1e-15);
}

TEST(KernelEval, SymmetricAndInUnitInterval) {
  const Covariates x = sample_uniform_cube(30, 3, 5);
  const KernelSpec spec = KernelSpec::gaussian(0.7);
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (std::size_t j = 0; j < x.n(); ++j) {
      const double v = kernel_eval(spec, x.point(i), x.point(j));
      EXPECT_EQ(v, kernel_eval(spec, x.point(j), x.point(i)));
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(KernelEval, DimensionMismatchThrows) {
  const std::vector<double> a{0.0};
  const std::vector<double> b{0.0, 1.0};
  EXPECT_THROW(kernel_eval(KernelSpec::gaussian(1.0), a, b), InvalidArgument);
}

TEST(KernelSpec, BandwidthValidationAndAuto) {
  EXPECT_THROW(KernelSpec::gaussian(0.0), InvalidArgument);
  EXPECT_THROW(KernelSpec::gaussian(-1.0), InvalidArgument);
  EXPECT_THROW(KernelSpec::gaussian(INFINITY), InvalidArgument);
  EXPECT_DOUBLE_EQ(auto_bandwidth(4), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(auto_bandwidth(1), std::sqrt(0.5));
  EXPECT_EQ(describe(KernelSpec::gaussian(1.5)), "gaussian(h=1.5)");
}

TEST(KernelMatrix, SinglePointIsOne) {
  const KernelMatrix k = kernel_matrix(sample_uniform_cube(1, 3, 1), KernelSpec::gaussian(1.0));
  ASSERT_EQ(k.n(), 1U);
  EXPECT_DOUBLE_EQ(k.entries(0, 0), 1.0);
}

TEST(KernelMatrix, IdenticalPointsGiveHalf) {
  const KernelMatrix k = kernel_matrix(points({{0.2, 0.4}, {0.2, 0.4}}), KernelSpec::gaussian(1.0));
  EXPECT_TRUE(k.entries.isApprox(Eigen::MatrixXd::Constant(2, 2, 0.5)));
}

TEST(KernelMatrix, MatchesDoubleLoopOracle) {
  const Covariates x = sample_uniform_cube(40, 4, 21);
  const KernelMatrix k = kernel_matrix(x, KernelSpec::gaussian(auto_bandwidth(4)));
  const Eigen::MatrixXd ref = oracle::kernel_matrix(x, auto_bandwidth(4));
  EXPECT_LE((k.entries - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(KernelMatrix, SymmetricAndIndependentOfThreads) {
  const Covariates x = sample_uniform_cube(64, 2, 8);
  const KernelSpec spec = KernelSpec::gaussian(0.5);
  const KernelMatrix k1 = kernel_matrix(x, spec, 1);
  const KernelMatrix k4 = kernel_matrix(x, spec, 4);
  EXPECT_EQ(k1.entries, k4.entries);
  EXPECT_LE((k1.entries - k1.entries.transpose()).cwiseAbs().maxCoeff(), 1e-12 * k1.entries.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < k1.entries.rows(); ++i) EXPECT_GT(k1.entries(i, i), 0.0);
}

TEST(KernelMatrix, PsdAndStrictlyPositiveForDistinctPoints) {
  const Covariates x = sample_uniform_cube(30, 4, 77);
  const KernelMatrix k = kernel_matrix(x, KernelSpec::gaussian(auto_bandwidth(4)));
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k.entries).eigenvalues();
  EXPECT_GE(ev.minCoeff(), -1e-10 * ev.maxCoeff());
  const EigenSystem eigen = eigendecompose(k);
  EXPECT_GT(eigen.mu(eigen.n() - 1), 0.0);
}

TEST(KernelColumn, MatchesOracleAndValidatesDimension) {
  const Covariates x = sample_uniform_cube(10, 3, 4);
  const std::vector<double> p{0.1, 0.2, 0.3};
  const Eigen::VectorXd col = kernel_column(x, KernelSpec::gaussian(0.9), p);
  EXPECT_LE((col - oracle::kernel_column(x, 0.9, p)).cwiseAbs().maxCoeff(), 1e-15);
  const std::vector<double> q{0.1};
  EXPECT_THROW(kernel_column(x, KernelSpec::gaussian(0.9), q), InvalidArgument);
}

TEST(CovariatesCsv, RoundTripIsExact) {
  const auto path = std::filesystem::temp_directory_path() / "tkrr_covariates_roundtrip.csv";
  const Covariates x = sample_uniform_cube(25, 3, 2);
  write_covariates_csv(path, x);
  EXPECT_EQ(read_covariates_csv(path).points(), x.points());
  std::filesystem::remove(path);
}

TEST(CovariatesCsv, RaggedRowsRejected) {
  const auto path = std::filesystem::temp_directory_path() / "tkrr_covariates_ragged.csv";
  csv::write_atomic(path, "0.1,0.2\n0.3\n");
  EXPECT_THROW(read_covariates_csv(path), IoError);
  std::filesystem::remove(path);
}
