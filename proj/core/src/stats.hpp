#pragma once

// Small numeric helpers shared by the feature extractors.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace selfcare::detail {

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Population standard deviation.
inline double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Linear-interpolated percentile, q in [0, 100].
inline double percentile(std::span<const double> x, double q) {
  if (x.empty()) return 0.0;
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double pos = q / 100.0 * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + frac * (s[hi] - s[lo]);
}

inline double safe_div(double num, double den) { return den != 0.0 ? num / den : 0.0; }

inline double min_of(std::span<const double> x) {
  return x.empty() ? 0.0 : *std::min_element(x.begin(), x.end());
}
inline double max_of(std::span<const double> x) {
  return x.empty() ? 0.0 : *std::max_element(x.begin(), x.end());
}

}  // namespace selfcare::detail
