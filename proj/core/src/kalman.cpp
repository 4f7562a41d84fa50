#include <algorithm>
#include <cmath>
#include <string>

#include "selfcare/errors.hpp"
#include "selfcare/kalman.hpp"

namespace selfcare::fusion {

std::string_view to_string(ProcessNoise q) {
  return q == ProcessNoise::Diagonal ? "diagonal" : "discrete_white_noise";
}

std::string_view to_string(NoiseMap r) {
  switch (r) {
    case NoiseMap::Double: return "double";
    case NoiseMap::Half: return "half";
    case NoiseMap::Constant: return "constant";
  }
  return "?";
}

void KalmanConfig::validate() const {
  const auto k = dim();
  if (k == 0) throw ConfigError("kalman: x0 must not be empty");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(x0.begin(), x0.end(), finite)) throw ConfigError("kalman: x0 must be finite");
  if (!(p0_scale >= 0.0) || !std::isfinite(p0_scale)) throw ConfigError("kalman: P0 scale must be >= 0");
  if (!(q_variance >= 0.0) || !std::isfinite(q_variance)) throw ConfigError("kalman: Q variance must be >= 0");
  if (q_model == ProcessNoise::DiscreteWhiteNoise && (k < 2 || k > 3)) {
    throw ConfigError("kalman: discrete white noise Q supports 2 or 3 states");
  }
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("kalman: epsilon must lie in [0, 1]");
  if (!gamma.empty()) {
    if (gamma.size() != k) throw ConfigError("kalman: gamma must have one entry per class");
    for (double g : gamma) {
      if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("kalman: gamma entries must be positive");
    }
  }
  if (r_map == NoiseMap::Constant && (!(r_constant > 0.0) || !std::isfinite(r_constant))) {
    throw ConfigError("kalman: constant R must be positive");
  }
}

Eigen::MatrixXd process_noise(ProcessNoise model, std::size_t dim, double variance) {
  const auto n = static_cast<Eigen::Index>(dim);
  if (model == ProcessNoise::Diagonal) return variance * Eigen::MatrixXd::Identity(n, n);
  // Piecewise white-noise acceleration model with dt = 1.
  Eigen::MatrixXd q(n, n);
  if (dim == 2) {
    q << 0.25, 0.5, 0.5, 1.0;
  } else if (dim == 3) {
    q << 0.25, 0.5, 0.5, 0.5, 1.0, 1.0, 0.5, 1.0, 1.0;
  } else {
    throw ConfigError("discrete white noise Q supports 2 or 3 states");
  }
  return variance * q;
}

KalmanFusion::KalmanFusion(KalmanConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.gamma.empty()) cfg_.gamma.assign(cfg_.dim(), 1.0);
  q_ = process_noise(cfg_.q_model, cfg_.dim(), cfg_.q_variance);
  reset();
}

void KalmanFusion::reset() {
  const auto n = static_cast<Eigen::Index>(cfg_.dim());
  x_ = Eigen::Map<const Eigen::VectorXd>(cfg_.x0.data(), n);
  p_ = cfg_.p0_scale * Eigen::MatrixXd::Identity(n, n);
}

void KalmanFusion::predict() { p_ += q_; }

bool KalmanFusion::update(std::span<const double> z) {
  const auto k = cfg_.dim();
  if (z.size() != k) throw DataError("kalman: measurement arity " + std::to_string(z.size()) + " != " + std::to_string(k));
  for (double v : z) {
    if (!std::isfinite(v)) throw DataError("kalman: non-finite measurement");
  }
  if (*std::max_element(z.begin(), z.end()) < cfg_.epsilon) return false;

  const auto n = static_cast<Eigen::Index>(k);
  Eigen::VectorXd zs(n);
  for (Eigen::Index c = 0; c < n; ++c) zs(c) = z[static_cast<std::size_t>(c)] * cfg_.gamma[static_cast<std::size_t>(c)];

  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  switch (cfg_.r_map) {
    case NoiseMap::Double: r.diagonal() = ((1.0 - zs.array()) * 2.0).square().matrix(); break;
    case NoiseMap::Half: r.diagonal() = ((1.0 - zs.array()) / 2.0).square().matrix(); break;
    case NoiseMap::Constant: r.diagonal().setConstant(cfg_.r_constant); break;
  }

  // K = P (P + R)^-1; both factors symmetric, so solve the transposed system.
  const Eigen::MatrixXd s = p_ + r;
  Eigen::MatrixXd gain = s.ldlt().solve(p_).transpose();
  if (!gain.allFinite()) gain = p_ * s.completeOrthogonalDecomposition().pseudoInverse();
  x_ -= gain * (x_ - zs);
  p_ -= gain * p_;

  const double asym = (p_ - p_.transpose()).cwiseAbs().maxCoeff();
  p_ = 0.5 * (p_ + p_.transpose());
  if (asym > 1e-6) throw NumericalError("kalman: covariance lost symmetry (" + std::to_string(asym) + ")");
  if (!x_.allFinite() || !p_.allFinite()) throw NumericalError("kalman: state became non-finite");
  return true;
}

int KalmanFusion::decision() const {
  Eigen::Index i = 0;
  x_.maxCoeff(&i);
  return static_cast<int>(i);
}

std::vector<double> KalmanFusion::normalized_state() const {
  std::vector<double> v(static_cast<std::size_t>(x_.size()));
  double sum = 0.0;
  for (Eigen::Index c = 0; c < x_.size(); ++c) {
    v[static_cast<std::size_t>(c)] = std::max(0.0, x_(c));
    sum += v[static_cast<std::size_t>(c)];
  }
  if (sum > 0.0) {
    for (auto& e : v) e /= sum;
  } else {
    std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(v.size()));
  }
  return v;
}

std::vector<int> kalman_fuse(std::span<const std::vector<std::vector<double>>> steps, const KalmanConfig& cfg) {
  KalmanFusion filter(cfg);
  std::vector<int> out;
  out.reserve(steps.size());
  for (const auto& step : steps) {
    filter.predict();
    for (const auto& z : step) filter.update(z);
    out.push_back(filter.decision());
  }
  return out;
}

}  // namespace selfcare::fusion
