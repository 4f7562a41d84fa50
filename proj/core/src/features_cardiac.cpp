#include <cmath>
#include <deque>
#include <numbers>

#include "selfcare/errors.hpp"
#include "selfcare/features.hpp"
#include "stats.hpp"

namespace selfcare::features {

using detail::mean;
using detail::safe_div;
using detail::stddev;

namespace {

// Max of x over [i - half, i + half] for every i (monotone deque).
std::vector<double> rolling_max(std::span<const double> x, std::size_t half) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  std::deque<std::size_t> dq;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = std::min(n - 1, i + half);
    while (next <= hi) {
      while (!dq.empty() && x[dq.back()] <= x[next]) dq.pop_back();
      dq.push_back(next++);
    }
    const std::size_t lo = i >= half ? i - half : 0;
    while (dq.front() < lo) dq.pop_front();
    out[i] = x[dq.front()];
  }
  return out;
}

}  // namespace

std::vector<double> detect_beats(std::span<const double> signal, double rate_hz, const FeatureConfig& cfg) {
  const std::size_t n = signal.size();
  if (n < 3) return {};
  const double m = mean(signal);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = signal[i] - m;

  const auto half = static_cast<std::size_t>(std::llround(0.5 * cfg.beat_max_window_s * rate_hz));
  const auto envelope = rolling_max(c, half);
  const double refractory = cfg.refractory_s * rate_hz;

  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(c[i] > c[i - 1] && c[i] >= c[i + 1])) continue;
    if (!(c[i] > 0.0) || !(c[i] > cfg.beat_threshold_ratio * envelope[i])) continue;
    if (!peaks.empty() && static_cast<double>(i - peaks.back()) < refractory) {
      if (c[i] > c[peaks.back()]) peaks.back() = i;
      continue;
    }
    peaks.push_back(i);
  }

  std::vector<double> positions;
  positions.reserve(peaks.size());
  for (auto i : peaks) {
    const double denom = c[i - 1] - 2.0 * c[i] + c[i + 1];
    const double offset = denom != 0.0 ? 0.5 * (c[i - 1] - c[i + 1]) / denom : 0.0;
    positions.push_back(static_cast<double>(i) + std::clamp(offset, -0.5, 0.5));
  }
  return positions;
}

std::vector<double> ibi_series(std::span<const double> beat_positions, double rate_hz, const FeatureConfig& cfg) {
  std::vector<double> ibi;
  for (std::size_t i = 1; i < beat_positions.size(); ++i) {
    const double ms = (beat_positions[i] - beat_positions[i - 1]) / rate_hz * 1000.0;
    if (ms >= cfg.ibi_min_ms && ms <= cfg.ibi_max_ms) ibi.push_back(ms);
  }
  return ibi;
}

double lomb_band_energy(std::span<const double> t_s, std::span<const double> values, double lo_hz, double hi_hz,
                        double step_hz) {
  if (t_s.size() < 3 || t_s.size() != values.size() || !(hi_hz > lo_hz)) return 0.0;
  const double m = mean(values);
  const auto steps = static_cast<std::size_t>(std::ceil((hi_hz - lo_hz) / step_hz - 1e-9));
  const double df = (hi_hz - lo_hz) / static_cast<double>(steps);
  double energy = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double f = lo_hz + (static_cast<double>(k) + 0.5) * df;
    const double w = 2.0 * std::numbers::pi * f;
    double s2 = 0.0, c2 = 0.0;
    for (double t : t_s) {
      s2 += std::sin(2.0 * w * t);
      c2 += std::cos(2.0 * w * t);
    }
    const double tau = std::atan2(s2, c2) / (2.0 * w);
    double yc = 0.0, ys = 0.0, cc = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < t_s.size(); ++i) {
      const double arg = w * (t_s[i] - tau);
      const double cs = std::cos(arg), sn = std::sin(arg);
      const double y = values[i] - m;
      yc += y * cs;
      ys += y * sn;
      cc += cs * cs;
      ss += sn * sn;
    }
    const double p = 0.5 * (safe_div(yc * yc, cc) + safe_div(ys * ys, ss));
    energy += p * df;
  }
  return energy;
}

std::vector<double> ibi_features(std::span<const double> ibi_ms, const FeatureConfig& cfg) {
  std::vector<double> out(feature_count(Sensor::BVP), 0.0);
  if (ibi_ms.empty()) return out;

  std::vector<double> hr(ibi_ms.size());
  for (std::size_t i = 0; i < ibi_ms.size(); ++i) hr[i] = 60000.0 / ibi_ms[i];

  double nn50 = 0.0, sq = 0.0;
  const std::size_t ndiff = ibi_ms.size() - 1;
  for (std::size_t i = 1; i < ibi_ms.size(); ++i) {
    const double d = ibi_ms[i] - ibi_ms[i - 1];
    if (std::abs(d) > cfg.nn50_ms) nn50 += 1.0;
    sq += d * d;
  }

  // IBI i is observed at the time of the beat that closes it.
  std::vector<double> t(ibi_ms.size());
  double clock = 0.0;
  for (std::size_t i = 0; i < ibi_ms.size(); ++i) {
    clock += ibi_ms[i] / 1000.0;
    t[i] = clock;
  }
  const double ulf = lomb_band_energy(t, ibi_ms, cfg.ulf_lo, cfg.ulf_hi, cfg.lomb_step_hz);
  const double lf = lomb_band_energy(t, ibi_ms, cfg.lf_lo, cfg.lf_hi, cfg.lomb_step_hz);
  const double hf = lomb_band_energy(t, ibi_ms, cfg.hf_lo, cfg.hf_hi, cfg.lomb_step_hz);
  const double uhf = lomb_band_energy(t, ibi_ms, cfg.uhf_lo, cfg.uhf_hi, cfg.lomb_step_hz);
  const double total = ulf + lf + hf;

  out = {mean(hr),
         stddev(hr),
         mean(ibi_ms),
         stddev(ibi_ms),
         nn50,
         safe_div(nn50, static_cast<double>(ndiff)),
         ndiff > 0 ? std::sqrt(sq / static_cast<double>(ndiff)) : 0.0,
         ulf,
         lf,
         hf,
         uhf,
         safe_div(lf, hf),
         total,
         safe_div(ulf, total),
         safe_div(lf, total),
         safe_div(hf, total),
         safe_div(lf, lf + hf),
         safe_div(hf, lf + hf),
         1.0};
  return out;
}

std::vector<double> cardiac_features(std::span<const double> signal, double rate_hz, const FeatureConfig& cfg) {
  const auto beats = detect_beats(signal, rate_hz, cfg);
  if (beats.size() < 2) {
    throw InsufficientBeatsError("found " + std::to_string(beats.size()) + " beats, need at least 2");
  }
  return ibi_features(ibi_series(beats, rate_hz, cfg), cfg);
}

}  // namespace selfcare::features
