#include <benchmark/benchmark.h>

#include <vector>

#include "tkrr/alignment.hpp"
#include "tkrr/experiments.hpp"
#include "tkrr/kernel.hpp"
#include "tkrr/risk.hpp"
#include "tkrr/spectral.hpp"

namespace {

using tkrr::Covariates;
using tkrr::KernelSpec;

void BM_KernelMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto threads = static_cast<unsigned>(state.range(1));
  const Covariates x = tkrr::sample_uniform_cube(n, 4, 1);
  const KernelSpec spec = KernelSpec::gaussian(tkrr::auto_bandwidth(4));
  for (auto _ : state) benchmark::DoNotOptimize(tkrr::kernel_matrix(x, spec, threads));
}
BENCHMARK(BM_KernelMatrix)->ArgsProduct({{100, 400, 1600}, {1, 4}})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_Eigendecompose(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto solver = state.range(1) == 0 ? tkrr::EigenSolverKind::SelfAdjoint : tkrr::EigenSolverKind::Jacobi;
  const Covariates x = tkrr::sample_uniform_cube(n, 4, 2);
  const tkrr::KernelMatrix k = tkrr::kernel_matrix(x, KernelSpec::gaussian(tkrr::auto_bandwidth(4)));
  for (auto _ : state) benchmark::DoNotOptimize(tkrr::eigendecompose(k, solver));
  state.SetLabel(state.range(1) == 0 ? "self-adjoint" : "jacobi");
}
BENCHMARK(BM_Eigendecompose)->ArgsProduct({{50, 100, 200}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_ExactMse(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const tkrr::SyntheticSpectra s = tkrr::polynomial_spectra(n, 1.0, 1.0);
  const Eigen::VectorXd xi = s.xi();
  for (auto _ : state) benchmark::DoNotOptimize(tkrr::exact_mse(s.mu, xi, n / 2, 1e-3, 1.0, n));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_ExactMse)->RangeMultiplier(4)->Range(256, 16384);

void BM_RateStudy(benchmark::State& state) {
  const std::vector<std::size_t> n_grid{256, 512, 1024, 2048, 4096, 8192, 16384};
  const tkrr::LambdaGrid grid{1e-10, 1e2, 1000};
  const tkrr::RateStudyOptions options{0, tkrr::TruncationRounding::Floor, static_cast<unsigned>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(tkrr::rate_study(1.0, 10.0, n_grid, 1.0, grid, options));
}
BENCHMARK(BM_RateStudy)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
