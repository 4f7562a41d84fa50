#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "selfcare/types.hpp"

namespace selfcare::features {

// How a feature responds when a constant is added to, or a positive factor
// multiplies, every channel the sensor reads. Used by the property tests.
enum class ShiftBehaviour : std::uint8_t { Shifts, Invariant, Other };
enum class ScaleBehaviour : std::uint8_t { Covariant, Invariant, Quadratic, Other };

struct FeatureDescriptor {
  std::string name;
  ShiftBehaviour shift = ShiftBehaviour::Other;
  ScaleBehaviour scale = ScaleBehaviour::Other;
};

// Every detector threshold in one place.
struct FeatureConfig {
  // beat detection and IBI cleaning
  double refractory_s = 0.25;
  double beat_threshold_ratio = 0.5;
  double beat_max_window_s = 5.0;
  double ibi_min_ms = 250.0;
  double ibi_max_ms = 1500.0;
  double nn50_ms = 50.0;
  // HRV bands, Hz
  double ulf_lo = 0.01, ulf_hi = 0.04;
  double lf_lo = 0.04, lf_hi = 0.15;
  double hf_lo = 0.15, hf_hi = 0.4;
  double uhf_lo = 0.4, uhf_hi = 1.0;
  double lomb_step_hz = 0.002;
  // EDA decomposition
  double scl_window_s = 4.0;
  double scr_threshold = 0.01;
  double scr_min_duration_s = 0.5;
  // EMG
  int emg_bands = 7;
  double emg_peak_std_factor = 1.0;
};

// Named feature values for one segment over a set of sensors, concatenated
// in canonical sensor order.
struct FeatureVector {
  std::vector<Sensor> sensors;
  std::vector<double> values;

  std::vector<std::string> names() const;
};

const std::vector<FeatureDescriptor>& descriptors(Sensor s);
std::size_t feature_count(Sensor s);

// Extracts one sensor's features from a segment. Undefined values come out
// as 0 next to a validity flag so the arity never changes.
// Throws MissingModalityError if a needed channel is absent.
std::vector<double> extract(const WindowedSegment& segment, Sensor s, const FeatureConfig& cfg = {});

// ---- signal-level entry points (testable without a segment) ----

std::vector<double> acc_features(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> z, double rate_hz);

// Beat sample positions (fractional, parabolic refinement).
std::vector<double> detect_beats(std::span<const double> signal, double rate_hz,
                                 const FeatureConfig& cfg = {});
// Successive beat intervals in ms, keeping only physiologically plausible ones.
std::vector<double> ibi_series(std::span<const double> beat_positions, double rate_hz,
                               const FeatureConfig& cfg = {});
// HRV features from an IBI series (ms). Works on any length; short series
// produce zeros for the statistics they cannot support.
std::vector<double> ibi_features(std::span<const double> ibi_ms, const FeatureConfig& cfg = {});
// Throws InsufficientBeatsError when fewer than two beats are found.
std::vector<double> cardiac_features(std::span<const double> signal, double rate_hz,
                                     const FeatureConfig& cfg = {});

std::vector<double> emg_features(std::span<const double> emg, double emg_rate_hz,
                                 std::span<const double> peak_channel, double peak_rate_hz,
                                 const FeatureConfig& cfg = {});
std::vector<double> eda_features(std::span<const double> eda, double rate_hz,
                                 const FeatureConfig& cfg = {});
std::vector<double> resp_features(std::span<const double> resp, double rate_hz);
std::vector<double> temp_features(std::span<const double> temp, double rate_hz);

// Lower-level pieces exposed for tests.
double peak_frequency(std::span<const double> x, double rate_hz);
// One-sided periodogram of the mean-removed signal, scaled so that the bins
// (excluding DC) sum to the population variance. Bin k sits at k*rate/n.
std::vector<double> power_spectrum(std::span<const double> x);
// Band energies of the Lomb-Scargle periodogram of values sampled at
// irregular times.
double lomb_band_energy(std::span<const double> t_s, std::span<const double> values, double lo_hz,
                        double hi_hz, double step_hz);
// Centred moving average over an odd window with odd-reflection padding.
std::vector<double> tonic_level(std::span<const double> eda, double rate_hz, double window_s);
double trapezoid_abs(std::span<const double> x, double rate_hz);
double ls_slope(std::span<const double> x, double rate_hz);

}  // namespace selfcare::features
