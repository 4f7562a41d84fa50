#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace selfcare::fusion {

// Process noise: var * I, or the piecewise white-noise form
// var * [[dt^4/4, dt^3/2, ...], ...] with dt = 1 (singular beyond 2 states).
enum class ProcessNoise : std::uint8_t { Diagonal, DiscreteWhiteNoise };

// Measurement noise as a function of the scaled measurement z':
// Double = diag(((1 - z') * 2)^2), Half = diag(((1 - z') / 2)^2),
// Constant = r_constant * I.
enum class NoiseMap : std::uint8_t { Double, Half, Constant };

std::string_view to_string(ProcessNoise q);
std::string_view to_string(NoiseMap r);

struct KalmanConfig {
  std::vector<double> x0;
  double p0_scale = 0.01;
  double q_variance = 5e-4;
  ProcessNoise q_model = ProcessNoise::Diagonal;
  double epsilon = 0.0;
  std::vector<double> gamma;  // empty = all ones
  NoiseMap r_map = NoiseMap::Half;
  double r_constant = 1.0;

  std::size_t dim() const { return x0.size(); }
  void validate() const;  // throws ConfigError
};

Eigen::MatrixXd process_noise(ProcessNoise model, std::size_t dim, double variance);

// Identity-dynamics filter over class scores. Stateful: one instance per
// subject stream, never shared between threads.
class KalmanFusion {
 public:
  explicit KalmanFusion(KalmanConfig cfg);

  void reset();
  // x stays, P += Q.
  void predict();
  // Returns false when the measurement is rejected (max(z) < epsilon).
  // Throws DataError on non-finite or mis-sized z, NumericalError when P
  // loses symmetry beyond 1e-6 (P is re-symmetrised first).
  bool update(std::span<const double> z);

  const Eigen::VectorXd& state() const { return x_; }
  const Eigen::MatrixXd& covariance() const { return p_; }
  const KalmanConfig& config() const { return cfg_; }
  int decision() const;
  // State clamped at zero and renormalised, for reporting only.
  std::vector<double> normalized_state() const;

 private:
  KalmanConfig cfg_;
  Eigen::MatrixXd q_;
  Eigen::VectorXd x_;
  Eigen::MatrixXd p_;
};

// Runs a whole stream: per step one predict, then the step's measurements
// in the given order. Returns one decision per step.
std::vector<int> kalman_fuse(std::span<const std::vector<std::vector<double>>> steps, const KalmanConfig& cfg);

}  // namespace selfcare::fusion
