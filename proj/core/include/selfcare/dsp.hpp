#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "selfcare/types.hpp"

namespace selfcare::dsp {

enum class FilterKind : std::uint8_t {
  ButterworthLowpass,
  ButterworthBandpass,
  FirLowpass,
  SavitzkyGolay,
};

struct FilterSpec {
  FilterKind kind = FilterKind::ButterworthLowpass;
  int order = 0;        // Butterworth prototype order
  int length = 0;       // FIR taps
  double low_hz = 0.0;  // lowpass cutoff, or lower bandpass edge
  double high_hz = 0.0; // upper bandpass edge
  int window_size = 0;  // Savitzky-Golay
  int poly_order = 0;   // Savitzky-Golay

  static FilterSpec butterworth_lowpass(int order, double cutoff_hz);
  static FilterSpec butterworth_bandpass(int order, double low_hz, double high_hz);
  static FilterSpec fir_lowpass(int length, double cutoff_hz);
  static FilterSpec savitzky_golay(int window_size, int poly_order);

  bool operator==(const FilterSpec&) const = default;
};

// Direct-form biquad, a0 normalised to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct FilterCoefficients {
  FilterSpec spec;
  double rate_hz = 0.0;
  std::vector<Biquad> sections;  // IIR designs
  std::vector<double> taps;      // FIR and Savitzky-Golay designs

  bool is_iir() const { return !sections.empty(); }
  // Number of poles (IIR) or taps (FIR/SG).
  std::size_t order() const;
  // Single-pass frequency response at f_hz.
  std::complex<double> response(double f_hz) const;
};

// Throws DesignError when the spec cannot be realised at rate_hz (cutoffs
// outside (0, Nyquist), even or too-short SG windows, empty FIR).
FilterCoefficients design_filter(const FilterSpec& spec, double rate_hz);

// Zero-phase forward-backward pass for IIR designs (odd reflection padding,
// steady-state initial conditions); centred convolution with mirror padding
// for FIR and Savitzky-Golay. Output has the input's length. Throws
// InsufficientDataError when the input is shorter than 3x the filter order.
std::vector<double> apply_filter(const FilterCoefficients& coeffs, std::span<const double> x);
SignalChannel apply_filter(const FilterCoefficients& coeffs, const SignalChannel& channel);

// The fixed per-device, per-modality chain. EMG on the chest additionally
// spawns EMG_PEAK (see peak_channel_chain()).
std::vector<FilterSpec> preprocessing_chain(Device device, Modality modality);
std::vector<FilterSpec> peak_channel_chain();

// Applies the chains to every channel present; chest records with EMG gain
// an EMG_PEAK channel.
SubjectRecord preprocess(const SubjectRecord& record);

struct SegmentationSpec {
  double window_s = 60.0;
  double slide_s = 5.0;

  void validate() const;  // throws ConfigError
};

// floor((duration - window) / slide) + 1, or 0 when duration < window.
std::size_t window_count(double duration_s, const SegmentationSpec& spec);

// Majority label of a run of label codes. Ties go to the tied label that
// is more frequent in the later half, then to the one seen last.
std::int32_t majority_label(std::span<const std::int32_t> labels);

// Slices the record into windows. Windows whose majority label is not a
// protocol label are dropped. Returned segments view into `record`.
// Throws InsufficientDataError if the record is shorter than one window.
std::vector<WindowedSegment> segment(const SubjectRecord& record, const SegmentationSpec& spec = {});

}  // namespace selfcare::dsp
