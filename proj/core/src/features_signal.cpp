#include <cmath>
#include <complex>

#include <unsupported/Eigen/FFT>

#include "selfcare/errors.hpp"
#include "selfcare/features.hpp"
#include "stats.hpp"

namespace selfcare::features {

using detail::max_of;
using detail::mean;
using detail::min_of;
using detail::percentile;
using detail::safe_div;
using detail::stddev;

std::vector<double> power_spectrum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return std::vector<double>(n, 0.0);
  const double m = mean(x);
  std::vector<std::complex<double>> in(n), out;
  for (std::size_t i = 0; i < n; ++i) in[i] = x[i] - m;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  std::vector<double> p(n / 2 + 1, 0.0);
  for (std::size_t k = 1; k < p.size(); ++k) {
    const bool nyquist = n % 2 == 0 && k == n / 2;
    p[k] = (nyquist ? 1.0 : 2.0) * std::norm(out[k]) / nn;
  }
  return p;
}

double peak_frequency(std::span<const double> x, double rate_hz) {
  const auto p = power_spectrum(x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (p[k] > (best == 0 ? 0.0 : p[best])) best = k;
  }
  return static_cast<double>(best) * rate_hz / static_cast<double>(x.size());
}

double trapezoid_abs(std::span<const double> x, double rate_hz) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (std::abs(x[i - 1]) + std::abs(x[i]));
  return s / rate_hz;
}

double ls_slope(std::span<const double> x, double rate_hz) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double tc = 0.5 * static_cast<double>(n - 1);
  const double m = mean(x);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tc;
    sxy += dt * (x[i] - m);
    sxx += dt * dt;
  }
  return sxy / sxx * rate_hz;
}

std::vector<double> acc_features(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> z, double rate_hz) {
  const std::size_t n = std::min({x.size(), y.size(), z.size()});
  x = x.first(n);
  y = y.first(n);
  z = z.first(n);
  std::vector<double> mag(n), sum(n);
  for (std::size_t i = 0; i < n; ++i) {
    mag[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
    sum[i] = x[i] + y[i] + z[i];
  }
  const double ix = trapezoid_abs(x, rate_hz);
  const double iy = trapezoid_abs(y, rate_hz);
  const double iz = trapezoid_abs(z, rate_hz);
  return {mean(x),         stddev(x),
          mean(y),         stddev(y),
          mean(z),         stddev(z),
          mean(mag),       stddev(mag),
          mean(sum),       stddev(sum),
          ix,              iy,
          iz,              ix + iy + iz,
          trapezoid_abs(mag, rate_hz),
          peak_frequency(x, rate_hz),
          peak_frequency(y, rate_hz),
          peak_frequency(z, rate_hz),
          peak_frequency(mag, rate_hz)};
}

std::vector<double> emg_features(std::span<const double> emg, double emg_rate_hz,
                                 std::span<const double> peak_channel, double peak_rate_hz,
                                 const FeatureConfig& cfg) {
  std::vector<double> out;
  out.reserve(feature_count(Sensor::EMG));
  out.insert(out.end(), {mean(emg), stddev(emg), percentile(emg, 50.0), max_of(emg) - min_of(emg),
                         trapezoid_abs(emg, emg_rate_hz), percentile(emg, 10.0), percentile(emg, 90.0)});

  const auto p = power_spectrum(emg);
  const std::size_t n = emg.size();
  double total = 0.0, weighted = 0.0;
  std::size_t peak_bin = 0;
  std::vector<double> bands(static_cast<std::size_t>(cfg.emg_bands), 0.0);
  const auto nb = static_cast<std::size_t>(cfg.emg_bands);
  for (std::size_t k = 1; k < p.size(); ++k) {
    const double f = static_cast<double>(k) * emg_rate_hz / static_cast<double>(n);
    total += p[k];
    weighted += f * p[k];
    if (p[k] > (peak_bin == 0 ? 0.0 : p[peak_bin])) peak_bin = k;
    // bin k lies at 2kB/n band-widths; bands are half-open on the left
    const std::size_t band = (2 * k * nb + n - 1) / n - 1;
    bands[std::min(band, nb - 1)] += p[k];
  }
  double median_f = 0.0;
  if (total > 0.0) {
    double acc = 0.0;
    for (std::size_t k = 1; k < p.size(); ++k) {
      acc += p[k];
      if (acc >= 0.5 * total) {
        median_f = static_cast<double>(k) * emg_rate_hz / static_cast<double>(n);
        break;
      }
    }
  }
  out.push_back(safe_div(weighted, total));
  out.push_back(median_f);
  out.push_back(static_cast<double>(peak_bin) * emg_rate_hz / static_cast<double>(n));
  out.insert(out.end(), bands.begin(), bands.end());

  // Peaks of the low-passed channel above mean + k*std; amplitudes are
  // measured from the channel median.
  const double threshold = mean(peak_channel) + cfg.emg_peak_std_factor * stddev(peak_channel);
  const double median = percentile(peak_channel, 50.0);
  std::vector<double> amps;
  for (std::size_t i = 1; i + 1 < peak_channel.size(); ++i) {
    const double v = peak_channel[i];
    if (v > peak_channel[i - 1] && v > peak_channel[i + 1] && v > threshold) amps.push_back(v - median);
  }
  double amp_sum = 0.0;
  for (double a : amps) amp_sum += a;
  const double duration = static_cast<double>(peak_channel.size()) / peak_rate_hz;
  out.insert(out.end(), {static_cast<double>(amps.size()), mean(amps), stddev(amps), amp_sum,
                         safe_div(amp_sum, duration), amps.empty() ? 0.0 : 1.0});
  return out;
}

std::vector<double> tonic_level(std::span<const double> eda, double rate_hz, double window_s) {
  const std::size_t n = eda.size();
  if (n == 0) return {};
  auto len = static_cast<std::size_t>(std::llround(window_s * rate_hz));
  if (len % 2 == 0) ++len;
  const std::size_t half = std::min(len / 2, n - 1);
  const auto at = [&](std::ptrdiff_t i) -> double {
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    if (i < 0) return 2.0 * eda[0] - eda[static_cast<std::size_t>(-i)];
    if (i > last) return 2.0 * eda[n - 1] - eda[static_cast<std::size_t>(2 * last - i)];
    return eda[static_cast<std::size_t>(i)];
  };
  const auto h = static_cast<std::ptrdiff_t>(half);
  std::vector<double> prefix(n + 2 * half + 1, 0.0);
  for (std::ptrdiff_t i = -h; i < static_cast<std::ptrdiff_t>(n) + h; ++i) {
    const auto j = static_cast<std::size_t>(i + h);
    prefix[j + 1] = prefix[j] + at(i);
  }
  std::vector<double> out(n);
  const double w = static_cast<double>(2 * half + 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = (prefix[i + 2 * half + 1] - prefix[i]) / w;
  return out;
}

std::vector<double> eda_features(std::span<const double> eda, double rate_hz, const FeatureConfig& cfg) {
  const std::size_t n = eda.size();
  const auto scl = tonic_level(eda, rate_hz, cfg.scl_window_s);
  std::vector<double> scr(n);
  for (std::size_t i = 0; i < n; ++i) scr[i] = eda[i] - scl[i];

  // Pearson correlation of the tonic level with time.
  const double scl_sd = stddev(scl);
  double corr = 0.0, corr_valid = 0.0;
  double scale = 0.0;
  for (double v : scl) scale = std::max(scale, std::abs(v));
  if (n > 1 && scl_sd > 1e-12 * scale) {
    const double m = mean(scl);
    const double tc = 0.5 * static_cast<double>(n - 1);
    double sxy = 0.0, stt = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dt = static_cast<double>(i) - tc;
      sxy += dt * (scl[i] - m);
      stt += dt * dt;
      sxx += (scl[i] - m) * (scl[i] - m);
    }
    corr = sxy / std::sqrt(stt * sxx);
    corr_valid = 1.0;
  }

  // Response segments: residual above threshold for long enough.
  const auto min_len = static_cast<std::size_t>(std::ceil(cfg.scr_min_duration_s * rate_hz - 1e-9));
  double count = 0.0, magnitude = 0.0, duration = 0.0, area = 0.0;
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < n;) {
    if (!(scr[i] > cfg.scr_threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && scr[j] > cfg.scr_threshold) ++j;
    if (j - i >= std::max<std::size_t>(min_len, 1)) {
      double peak = eda[i], trough = eda[i];
      for (std::size_t k = i; k < j; ++k) peak = std::max(peak, eda[k]);
      for (std::size_t k = prev_end; k <= i; ++k) trough = std::min(trough, eda[k]);
      double a = 0.0;
      for (std::size_t k = i; k < j; ++k) a += scr[k];
      count += 1.0;
      magnitude += peak - trough;
      duration += static_cast<double>(j - i) / rate_hz;
      area += a / rate_hz;
      prev_end = j;
    }
    i = j;
  }

  return {mean(eda),  stddev(eda), min_of(eda), max_of(eda), ls_slope(eda, rate_hz),
          max_of(eda) - min_of(eda), mean(scl), stddev(scl), stddev(scr), corr,
          corr_valid, count,       magnitude,   duration,    area};
}

std::vector<double> resp_features(std::span<const double> resp, double rate_hz) {
  std::vector<double> out(feature_count(Sensor::RESP), 0.0);
  const std::size_t n = resp.size();
  if (n < 3) return out;
  const double m = mean(resp);

  // Split the centred signal into same-sign lobes; interior lobes give one
  // extreme each (peak for positive, trough for negative).
  struct Extreme {
    double t;
    double value;
    bool peak;
  };
  std::vector<Extreme> extremes;
  std::size_t start = 0;
  bool positive = resp[0] - m >= 0.0;
  bool first = true;
  for (std::size_t i = 1; i <= n; ++i) {
    const bool pos = i < n ? resp[i] - m >= 0.0 : !positive;
    if (pos == positive) continue;
    if (!first && i < n) {
      std::size_t best = start;
      for (std::size_t k = start; k < i; ++k) {
        if (positive ? resp[k] > resp[best] : resp[k] < resp[best]) best = k;
      }
      extremes.push_back({static_cast<double>(best) / rate_hz, resp[best], positive});
    }
    first = false;
    start = i;
    positive = pos;
  }

  std::vector<double> inhale, exhale, volume, troughs;
  for (std::size_t i = 0; i < extremes.size(); ++i) {
    if (!extremes[i].peak) troughs.push_back(extremes[i].t);
    if (i == 0) continue;
    const auto& a = extremes[i - 1];
    const auto& b = extremes[i];
    if (!a.peak && b.peak) {
      inhale.push_back(b.t - a.t);
      volume.push_back(b.value - a.value);
    } else if (a.peak && !b.peak) {
      exhale.push_back(b.t - a.t);
    }
  }
  std::vector<double> cycles;
  for (std::size_t i = 1; i < troughs.size(); ++i) cycles.push_back(troughs[i] - troughs[i - 1]);
  double cycle_sum = 0.0;
  for (double c : cycles) cycle_sum += c;

  out[6] = max_of(resp) - min_of(resp);
  if (inhale.empty() || exhale.empty()) return out;
  out[0] = mean(inhale);
  out[1] = stddev(inhale);
  out[2] = mean(exhale);
  out[3] = stddev(exhale);
  out[4] = safe_div(out[0], out[2]);
  out[5] = mean(volume);
  out[7] = cycles.empty() ? 0.0 : safe_div(60.0, mean(cycles));
  out[8] = cycle_sum;
  out[9] = 1.0;
  return out;
}

std::vector<double> temp_features(std::span<const double> temp, double rate_hz) {
  return {mean(temp),   stddev(temp),          min_of(temp),
          max_of(temp), ls_slope(temp, rate_hz), max_of(temp) - min_of(temp)};
}

}  // namespace selfcare::features
