#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "selfcare/dsp.hpp"
#include "selfcare/errors.hpp"

using namespace selfcare;
using namespace selfcare::dsp;
using selfcare::oracle::kPi;
using selfcare::oracle::sampled;

namespace {

struct Cutoff {
  FilterSpec spec;
  double rate_hz;
};

// Every Butterworth design the preprocessing chains use, at the rates they run at.
std::vector<Cutoff> butterworth_designs() {
  return {
      {FilterSpec::butterworth_bandpass(3, 0.7, 3.7), 64.0},
      {FilterSpec::butterworth_lowpass(6, 1.0), 4.0},
      {FilterSpec::butterworth_bandpass(3, 0.7, 3.7), 700.0},
      {FilterSpec::butterworth_lowpass(2, 5.0), 700.0},
      {FilterSpec::butterworth_lowpass(3, 0.5), 700.0},
      {FilterSpec::butterworth_bandpass(3, 0.1, 0.35), 700.0},
  };
}

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

TEST(Design, ButterworthGainAtEveryCutoff) {
  for (const auto& [spec, rate] : butterworth_designs()) {
    const auto c = design_filter(spec, rate);
    EXPECT_NEAR(std::abs(c.response(spec.low_hz)), 1.0 / std::sqrt(2.0), 0.01 / std::sqrt(2.0)) << rate;
    if (spec.kind == FilterKind::ButterworthBandpass) {
      EXPECT_NEAR(std::abs(c.response(spec.high_hz)), 1.0 / std::sqrt(2.0), 0.01 / std::sqrt(2.0)) << rate;
    }
  }
}

TEST(Design, LowpassHasUnitDcGain) {
  for (const auto& spec : {FilterSpec::butterworth_lowpass(6, 1.0), FilterSpec::fir_lowpass(64, 0.4),
                           FilterSpec::savitzky_golay(31, 5)}) {
    const auto c = design_filter(spec, 32.0);
    const std::vector<double> flat(400, 2.5);
    for (double v : apply_filter(c, flat)) EXPECT_NEAR(v, 2.5, 1e-9);
  }
}

TEST(Design, SavitzkyGolayMatchesLeastSquares) {
  for (auto [w, p] : {std::pair{5, 2}, {11, 3}, {31, 5}}) {
    const auto c = design_filter(FilterSpec::savitzky_golay(w, p), 100.0);
    const auto oracle = oracle::sg_taps(w, p);
    ASSERT_EQ(c.taps.size(), oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(c.taps[i], oracle[i], 1e-12);
  }
}

TEST(Design, RejectsUnrealisableSpecs) {
  EXPECT_THROW(design_filter(FilterSpec::butterworth_lowpass(3, 2.0), 4.0), DesignError);
  EXPECT_THROW(design_filter(FilterSpec::butterworth_bandpass(3, 0.7, 40.0), 64.0), DesignError);
  EXPECT_THROW(design_filter(FilterSpec::savitzky_golay(10, 3), 64.0), DesignError);
  EXPECT_THROW(design_filter(FilterSpec::savitzky_golay(3, 3), 64.0), DesignError);
  EXPECT_THROW(design_filter(FilterSpec::fir_lowpass(0, 1.0), 64.0), DesignError);
}

TEST(Apply, SavitzkyGolayExactOnCubics) {
  const auto c = design_filter(FilterSpec::savitzky_golay(11, 3), 100.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = u(rng), b = u(rng), cc = u(rng), d = u(rng);
    const auto x = sampled(100.0, 2.0, [&](double t) { return a + b * t + cc * t * t + d * t * t * t; });
    const auto y = apply_filter(c, x);
    for (std::size_t i = 5; i + 5 < x.size(); ++i) ASSERT_NEAR(y[i], x[i], 1e-9);
  }
}

TEST(Apply, BandpassPassesAndStops) {
  const auto c = design_filter(FilterSpec::butterworth_bandpass(3, 0.7, 3.7), 64.0);
  const auto slow = sampled(64.0, 200.0, [](double t) { return std::sin(2 * kPi * 0.05 * t); });
  const auto mid = sampled(64.0, 60.0, [](double t) { return std::sin(2 * kPi * 2.0 * t); });
  EXPECT_LT(rms(apply_filter(c, slow)), 0.05 * rms(slow));
  EXPECT_NEAR(rms(apply_filter(c, mid)), rms(mid), 0.05 * rms(mid));
}

// Phase of the output against the input, measured by projection onto the
// sine and cosine at the test frequency and converted to samples.
TEST(Apply, ZeroPhaseOnInBandSines) {
  const auto c = design_filter(FilterSpec::butterworth_bandpass(3, 0.7, 3.7), 64.0);
  for (double f : {1.0, 1.7, 2.5, 3.2}) {
    const auto x = sampled(64.0, 30.0, [&](double t) { return std::sin(2 * kPi * f * t); });
    const auto y = apply_filter(c, x);
    double in_phase = 0.0, quadrature = 0.0;
    for (std::size_t i = 320; i + 320 < x.size(); ++i) {
      const double w = 2 * kPi * f * static_cast<double>(i) / 64.0;
      in_phase += y[i] * std::sin(w);
      quadrature += y[i] * std::cos(w);
    }
    const double lag_samples = std::atan2(quadrature, in_phase) / (2 * kPi * f) * 64.0;
    EXPECT_EQ(std::lround(lag_samples), 0) << f << " Hz, lag " << lag_samples;
    EXPECT_LT(std::abs(lag_samples), 0.05) << f;
  }
}

TEST(Apply, LinearAndLengthPreserving) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  std::vector<double> a(500), b(500), mix(500);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = n(rng);
    b[i] = n(rng);
    mix[i] = 2.0 * a[i] - 0.5 * b[i];
  }
  for (const auto& spec : {FilterSpec::butterworth_bandpass(3, 0.7, 3.7), FilterSpec::fir_lowpass(64, 0.4),
                           FilterSpec::savitzky_golay(11, 3)}) {
    const auto c = design_filter(spec, 64.0);
    const auto ya = apply_filter(c, a), yb = apply_filter(c, b), ym = apply_filter(c, mix);
    ASSERT_EQ(ym.size(), mix.size());
    for (std::size_t i = 0; i < ym.size(); ++i) ASSERT_NEAR(ym[i], 2.0 * ya[i] - 0.5 * yb[i], 1e-9);
  }
}

TEST(Apply, ShortInputRejected) {
  const auto c = design_filter(FilterSpec::butterworth_lowpass(6, 1.0), 4.0);
  EXPECT_THROW(apply_filter(c, std::vector<double>(5, 1.0)), InsufficientDataError);
}

TEST(Preprocess, ChainsMatchTheProtocol) {
  using K = FilterKind;
  auto kinds = [](const std::vector<FilterSpec>& chain) {
    std::vector<K> out;
    for (const auto& s : chain) out.push_back(s.kind);
    return out;
  };
  EXPECT_EQ(preprocessing_chain(Device::Wrist, Modality::ACC_X), std::vector<FilterSpec>{FilterSpec::fir_lowpass(64, 0.4)});
  EXPECT_EQ(preprocessing_chain(Device::Wrist, Modality::BVP),
            std::vector<FilterSpec>{FilterSpec::butterworth_bandpass(3, 0.7, 3.7)});
  EXPECT_EQ(preprocessing_chain(Device::Wrist, Modality::EDA), std::vector<FilterSpec>{FilterSpec::butterworth_lowpass(6, 1.0)});
  EXPECT_EQ(preprocessing_chain(Device::Wrist, Modality::TEMP), std::vector<FilterSpec>{FilterSpec::savitzky_golay(11, 3)});
  EXPECT_EQ(preprocessing_chain(Device::Chest, Modality::ACC_Z), std::vector<FilterSpec>{FilterSpec::savitzky_golay(31, 5)});
  EXPECT_EQ(preprocessing_chain(Device::Chest, Modality::RESP),
            (std::vector<FilterSpec>{FilterSpec::savitzky_golay(11, 3), FilterSpec::butterworth_bandpass(3, 0.1, 0.35)}));
  EXPECT_EQ(kinds(preprocessing_chain(Device::Chest, Modality::ECG)), (std::vector<K>{K::SavitzkyGolay, K::ButterworthBandpass}));
  EXPECT_EQ(preprocessing_chain(Device::Chest, Modality::EDA),
            (std::vector<FilterSpec>{FilterSpec::savitzky_golay(11, 3), FilterSpec::butterworth_lowpass(2, 5.0)}));
  EXPECT_EQ(peak_channel_chain().back(), FilterSpec::butterworth_lowpass(3, 0.5));
}

TEST(Preprocess, ConstantTempUnchangedAndEmgSpawnsPeakChannel) {
  auto r = oracle::labelled_record("S", Device::Chest, 10.0);
  oracle::add_channel(r, Modality::TEMP, 700.0, std::vector<double>(7000, 33.25));
  oracle::add_channel(r, Modality::EMG, 700.0, sampled(700.0, 10.0, [](double t) { return std::sin(50 * t); }));
  const auto out = preprocess(r);
  for (double v : out.channel(Modality::TEMP).samples) ASSERT_NEAR(v, 33.25, 1e-9);
  ASSERT_TRUE(out.has(Modality::EMG_PEAK));
  EXPECT_EQ(out.channel(Modality::EMG_PEAK).samples.size(), 7000u);
}

TEST(Segmentation, CountMatchesEnumerationOnRandomTriples) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    // Millisecond grid keeps the enumeration exact.
    const long window_ms = std::uniform_int_distribution<long>(1000, 90000)(rng);
    const long slide_ms = std::uniform_int_distribution<long>(250, window_ms)(rng);
    const long duration_ms = std::uniform_int_distribution<long>(window_ms, 400000)(rng);
    long expected = 0;
    for (long start = 0; start + window_ms <= duration_ms; start += slide_ms) ++expected;
    const SegmentationSpec spec{window_ms / 1000.0, slide_ms / 1000.0};
    ASSERT_EQ(window_count(duration_ms / 1000.0, spec), static_cast<std::size_t>(expected))
        << duration_ms << ' ' << window_ms << ' ' << slide_ms;
  }
}

TEST(Segmentation, BoundaryCasesAndOverlap) {
  auto make = [](double seconds) {
    auto r = oracle::labelled_record("S", Device::Wrist, seconds);
    oracle::add_channel(r, Modality::EDA, 4.0, std::vector<double>(static_cast<std::size_t>(seconds * 4), 1.0));
    return r;
  };
  const auto one = make(60.0);
  EXPECT_EQ(segment(one).size(), 1u);
  const auto two = make(120.0);
  const auto segs = segment(two);
  ASSERT_EQ(segs.size(), 13u);
  const auto& a = segs[3].channel(Modality::EDA).samples;
  const auto& b = segs[4].channel(Modality::EDA).samples;
  EXPECT_EQ(a.size(), 240u);
  EXPECT_EQ(a.data() + 20, b.data());  // 55 s shared at 4 Hz
  EXPECT_THROW(segment(make(59.0)), InsufficientDataError);
}

TEST(Segmentation, OtherLabelsDroppedAndTiesGoLate) {
  auto r = oracle::labelled_record("S", Device::Wrist, 70.0, 0);
  oracle::add_channel(r, Modality::EDA, 4.0, std::vector<double>(280, 1.0));
  EXPECT_TRUE(segment(r).empty());
  const std::vector<std::int32_t> tie = {1, 1, 2, 2};
  EXPECT_EQ(majority_label(tie), 2);
  const std::vector<std::int32_t> plain = {3, 3, 3, 1};
  EXPECT_EQ(majority_label(plain), 3);
}
