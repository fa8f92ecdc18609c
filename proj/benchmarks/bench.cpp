// Microbenchmarks for the workbench hot paths: region membership and
// boundary tracing, spectrum constraining at the orders the tools use,
// subspace identification on realistic record lengths, and the signal
// generators feeding the Monte Carlo harness.

#include <benchmark/benchmark.h>

#include <complex>

#include "sid/constrain.hpp"
#include "sid/features.hpp"
#include "sid/lti.hpp"
#include "sid/region.hpp"
#include "sid/sysid.hpp"

using namespace sid;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const TransferFunction kPlant{{0.7}, {1.0, 0.4, 1.0}};
const TransferFunction kNoiseFilter{{10.0, 0.0, 5.0}, {1.0, 10.0, 1.0, 2.0}};

Region workbench_region() {
  return intersect(damping_ellipse_conservative(0.36),
                   frequency_cone(1.27 * 0.3));
}

MatrixXd prbs_matrix(int samples, std::uint32_t seed) {
  const auto seq = prbs(16, 100, 1.0, samples, seed);
  MatrixXd u(samples, 1);
  for (int k = 0; k < samples; ++k) u(k, 0) = seq[static_cast<size_t>(k)];
  return u;
}

// A matrix of the requested order whose spectrum sits outside the region, so
// constrain_spectrum exercises the full interior-point descent.
MatrixXd exterior_matrix(int n) {
  MatrixXd a = MatrixXd::Zero(n, n);
  for (int k = 0; k + 1 < n; k += 2) {
    a(k, k) = 0.9;
    a(k, k + 1) = 0.55;
    a(k + 1, k) = -0.55;
    a(k + 1, k + 1) = 0.9;
  }
  if (n % 2) a(n - 1, n - 1) = -0.7;
  return a;
}

void bm_region_membership(benchmark::State& state) {
  const Region r = workbench_region();
  const std::complex<double> z(0.9, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(member_min_eig(r, z));
}
BENCHMARK(bm_region_membership);

void bm_region_constructors(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(damping_circle(0.36));
    benchmark::DoNotOptimize(damping_ellipse(0.36));
    benchmark::DoNotOptimize(damping_ellipse_conservative(0.36));
    benchmark::DoNotOptimize(frequency_cone(0.381));
    benchmark::DoNotOptimize(settling_circle(0.48, 0.05));
  }
}
BENCHMARK(bm_region_constructors);

void bm_boundary_polyline(benchmark::State& state) {
  const Region r = workbench_region();
  for (auto _ : state) benchmark::DoNotOptimize(boundary_polyline(r, 720));
}
BENCHMARK(bm_boundary_polyline);

void bm_constrain(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Region r = workbench_region();
  const MatrixXd a = exterior_matrix(n);
  for (auto _ : state) benchmark::DoNotOptimize(constrain_spectrum(a, r));
}
BENCHMARK(bm_constrain)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void bm_constrain_interior(benchmark::State& state) {
  const Region r = workbench_region();
  MatrixXd a(2, 2);
  a << 0.8, 0.1, -0.1, 0.8;  // spectrum already inside the region
  for (auto _ : state) benchmark::DoNotOptimize(constrain_spectrum(a, r));
}
BENCHMARK(bm_constrain_interior)->Unit(benchmark::kMicrosecond);

void bm_identify(benchmark::State& state) {
  const int samples = static_cast<int>(state.range(0));
  const DiscreteStateSpace plant = c2d_zoh(tf_to_ss(kPlant), 0.3);
  const MatrixXd u = prbs_matrix(samples, 44769u);
  MatrixXd y = simulate(plant, u);
  y.col(0) += colored_noise(kNoiseFilter, 0.3, samples, 1.0, 1234, 80);
  SubspaceConfig cfg;
  cfg.order = 2;
  for (auto _ : state) benchmark::DoNotOptimize(pi_moesp(u, y, 0.3, cfg));
}
BENCHMARK(bm_identify)->Arg(134)->Arg(1000)->Arg(4000)->Unit(
    benchmark::kMillisecond);

void bm_prbs_simulate(benchmark::State& state) {
  const DiscreteStateSpace plant = c2d_zoh(tf_to_ss(kPlant), 0.3);
  for (auto _ : state) {
    const MatrixXd u = prbs_matrix(1000, 44769u);
    benchmark::DoNotOptimize(simulate(plant, u));
  }
}
BENCHMARK(bm_prbs_simulate);

void bm_colored_noise(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(
        colored_noise(kNoiseFilter, 0.3, 1000, 1.0, 1234, 80));
}
BENCHMARK(bm_colored_noise);

void bm_feature_extraction(benchmark::State& state) {
  const DiscreteStateSpace plant = c2d_zoh(tf_to_ss(kPlant), 0.3);
  const int n = 101;
  const MatrixXd y = step_response(plant, n);
  VectorXd t(n), ys = y.col(0);
  for (int k = 0; k < n; ++k) t[k] = 0.3 * k;
  FeatureConfig fc;
  fc.smooth_window = 3;
  for (auto _ : state)
    benchmark::DoNotOptimize(extract_step_features(t, ys, fc));
}
BENCHMARK(bm_feature_extraction);

}  // namespace

BENCHMARK_MAIN();
