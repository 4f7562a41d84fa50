#pragma once

// Reference computations written independently of the library, shared by
// the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "selfcare/types.hpp"

namespace selfcare::oracle {

// Savitzky-Golay smoothing taps from the Vandermonde least-squares fit,
// evaluated at the window centre.
inline std::vector<double> sg_taps(int window, int order) {
  const int half = window / 2;
  Eigen::MatrixXd v(window, order + 1);
  for (int i = 0; i < window; ++i) {
    for (int p = 0; p <= order; ++p) v(i, p) = std::pow(static_cast<double>(i - half), p);
  }
  const Eigen::MatrixXd pinv = v.completeOrthogonalDecomposition().pseudoInverse();
  std::vector<double> taps(static_cast<std::size_t>(window));
  for (int i = 0; i < window; ++i) taps[static_cast<std::size_t>(i)] = pinv(0, i);
  return taps;
}

inline double trapezoid(std::span<const double> x, double rate_hz) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (std::abs(x[i - 1]) + std::abs(x[i]));
  return s / rate_hz;
}

// Least-squares slope against t = i / rate via the 2x2 normal equations.
inline double lsq_slope(std::span<const double> y, double rate_hz) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(y.size()), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    a(static_cast<Eigen::Index>(i), 0) = 1.0;
    a(static_cast<Eigen::Index>(i), 1) = static_cast<double>(i) / rate_hz;
    b(static_cast<Eigen::Index>(i)) = y[i];
  }
  const Eigen::Vector2d beta = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  return beta(1);
}

// Best single-feature, single-threshold split by weighted entropy; the
// first (lowest) threshold wins ties. Returns leaf class distributions.
struct Stump {
  double threshold = 0.0;
  std::vector<double> left, right;
};

inline Stump entropy_stump(std::span<const double> x, std::span<const int> y, std::span<const double> w, int k) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  auto cost = [&](const std::vector<double>& c) {
    double t = 0.0, s = 0.0;
    for (double v : c) t += v;
    for (double v : c)
      if (v > 0.0) s -= v * std::log(v / t);
    return s;
  };
  Stump best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t cut = 1; cut < idx.size(); ++cut) {
    if (!(x[idx[cut]] > x[idx[cut - 1]])) continue;
    std::vector<double> l(static_cast<std::size_t>(k), 0.0), r(static_cast<std::size_t>(k), 0.0);
    for (std::size_t j = 0; j < idx.size(); ++j) (j < cut ? l : r)[static_cast<std::size_t>(y[idx[j]])] += w[idx[j]];
    const double c = cost(l) + cost(r);
    if (c < best_cost - 1e-12) {
      best_cost = c;
      best.threshold = 0.5 * (x[idx[cut - 1]] + x[idx[cut]]);
      auto norm = [](std::vector<double> v) {
        const double t = std::accumulate(v.begin(), v.end(), 0.0);
        for (auto& e : v) e /= t;
        return v;
      };
      best.left = norm(l);
      best.right = norm(r);
    }
  }
  return best;
}

// Accuracy and macro F1 recounted from raw (truth, prediction) pairs.
struct Recount {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

inline Recount recount(std::span<const int> truth, std::span<const int> pred, int k) {
  Recount r;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
  r.accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
  for (int c = 0; c < k; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      tp += truth[i] == c && pred[i] == c;
      fp += truth[i] != c && pred[i] == c;
      fn += truth[i] == c && pred[i] != c;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rc = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    r.macro_f1 += p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
  }
  r.macro_f1 /= k;
  return r;
}

// Record with one constant protocol label and the given channels.
inline SubjectRecord labelled_record(std::string id, Device device, double duration_s,
                                     std::int32_t label = kBaselineCode) {
  SubjectRecord r;
  r.subject_id = std::move(id);
  r.device = device;
  r.label_rate_hz = 4.0;
  r.labels.assign(static_cast<std::size_t>(std::llround(duration_s * 4.0)), label);
  return r;
}

inline void add_channel(SubjectRecord& r, Modality m, double rate_hz, std::vector<double> samples) {
  SignalChannel ch;
  ch.modality = m;
  ch.device = r.device;
  ch.rate_hz = rate_hz;
  ch.samples = std::move(samples);
  r.channels[m] = std::move(ch);
}

template <typename F>
std::vector<double> sampled(double rate_hz, double duration_s, F&& f) {
  const auto n = static_cast<std::size_t>(std::llround(rate_hz * duration_s));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(static_cast<double>(i) / rate_hz);
  return out;
}

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace selfcare::oracle
