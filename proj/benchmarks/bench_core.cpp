#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "selfcare/dsp.hpp"
#include "selfcare/features.hpp"
#include "selfcare/kalman.hpp"
#include "selfcare/learners.hpp"

using namespace selfcare;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

void BM_DesignBandpass(benchmark::State& state) {
  const auto spec = dsp::FilterSpec::butterworth_bandpass(3, 0.7, 3.7);
  for (auto _ : state) benchmark::DoNotOptimize(dsp::design_filter(spec, 700.0));
}
BENCHMARK(BM_DesignBandpass);

// One minute of chest ECG through the zero-phase bandpass.
void BM_FiltfiltMinuteAt700Hz(benchmark::State& state) {
  const auto coeffs = dsp::design_filter(dsp::FilterSpec::butterworth_bandpass(3, 0.7, 3.7), 700.0);
  const auto x = noise(42000, 1);
  for (auto _ : state) benchmark::DoNotOptimize(dsp::apply_filter(coeffs, x));
}
BENCHMARK(BM_FiltfiltMinuteAt700Hz);

void BM_CardiacFeaturesBvp(benchmark::State& state) {
  std::vector<double> x(64 * 60);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * 3.14159265358979 * 1.2 * static_cast<double>(i) / 64.0);
  for (auto _ : state) benchmark::DoNotOptimize(features::cardiac_features(x, 64.0));
}
BENCHMARK(BM_CardiacFeaturesBvp);

void BM_TreeFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  learners::Matrix x(n, 30);
  x.data = noise(n * 30, 2);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x(i, 0) + 0.5 * x(i, 1) > 0 ? 1 : static_cast<int>(i % 3 == 0) * 2;
  learners::LearnerConfig cfg;
  cfg.family = learners::Family::DT;
  for (auto _ : state) benchmark::DoNotOptimize(learners::fit(cfg, x, y, 3));
}
BENCHMARK(BM_TreeFit)->Arg(1000)->Arg(5000);

void BM_KalmanStep(benchmark::State& state) {
  fusion::KalmanConfig c;
  c.x0 = {0.8, 0.1, 0.1};
  c.epsilon = 0.0;
  fusion::KalmanFusion kf(c);
  const std::vector<double> z = {0.6, 0.3, 0.1};
  for (auto _ : state) {
    kf.predict();
    benchmark::DoNotOptimize(kf.update(z));
  }
}
BENCHMARK(BM_KalmanStep);

}  // namespace

BENCHMARK_MAIN();
