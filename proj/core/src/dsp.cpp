#include "selfcare/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "selfcare/errors.hpp"

namespace selfcare::dsp {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

void require_cutoff(double f, double rate_hz, const char* what) {
  if (!(f > 0.0) || !(f < 0.5 * rate_hz)) {
    throw DesignError(std::string(what) + " " + std::to_string(f) + " Hz outside (0, " +
                      std::to_string(0.5 * rate_hz) + ") Hz");
  }
}

double prewarp(double f_hz, double rate_hz) { return 2.0 * rate_hz * std::tan(kPi * f_hz / rate_hz); }

cplx bilinear(cplx s, double rate_hz) {
  const double k = 2.0 * rate_hz;
  return (k + s) / (k - s);
}

// Left-half-plane poles of the unit-cutoff analog Butterworth prototype.
std::vector<cplx> prototype_poles(int n) {
  std::vector<cplx> poles;
  for (int k = 0; k < n; ++k) {
    const double theta = kPi * (2.0 * k + n + 1) / (2.0 * n);
    poles.push_back(std::polar(1.0, theta));
  }
  return poles;
}

// Groups digital poles into conjugate pairs (or pairs of real poles) and
// returns the corresponding denominators.
std::vector<Biquad> pole_sections(const std::vector<cplx>& poles) {
  std::vector<Biquad> sections;
  std::vector<double> reals;
  for (const auto& p : poles) {
    const double tol = 1e-12 * std::max(1.0, std::abs(p));
    if (std::abs(p.imag()) <= tol) {
      reals.push_back(p.real());
    } else if (p.imag() > 0.0) {
      Biquad s;
      s.a1 = -2.0 * p.real();
      s.a2 = std::norm(p);
      sections.push_back(s);
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i < reals.size(); i += 2) {
    Biquad s;
    if (i + 1 < reals.size()) {
      s.a1 = -(reals[i] + reals[i + 1]);
      s.a2 = reals[i] * reals[i + 1];
    } else {
      s.a1 = -reals[i];
      s.a2 = 0.0;
    }
    sections.push_back(s);
  }
  return sections;
}

cplx section_response(const Biquad& s, double omega) {
  const cplx z1 = std::polar(1.0, -omega);
  const cplx z2 = z1 * z1;
  return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

void normalise_at(Biquad& s, double omega) {
  const double g = std::abs(section_response(s, omega));
  s.b0 /= g;
  s.b1 /= g;
  s.b2 /= g;
}

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double rate_hz) {
  const double wc = prewarp(cutoff_hz, rate_hz);
  std::vector<cplx> digital;
  for (const auto& p : prototype_poles(order)) digital.push_back(bilinear(wc * p, rate_hz));
  auto sections = pole_sections(digital);
  for (auto& s : sections) {
    // All zeros sit at z = -1.
    if (s.a2 == 0.0) {  // leftover first-order section of an odd design
      s.b0 = 1.0;
      s.b1 = 1.0;
      s.b2 = 0.0;
    } else {
      s.b0 = 1.0;
      s.b1 = 2.0;
      s.b2 = 1.0;
    }
    normalise_at(s, 0.0);
  }
  return sections;
}

std::vector<Biquad> butterworth_bandpass(int order, double low_hz, double high_hz, double rate_hz) {
  const double wl = prewarp(low_hz, rate_hz);
  const double wh = prewarp(high_hz, rate_hz);
  const double bw = wh - wl;
  const double w0 = std::sqrt(wl * wh);
  std::vector<cplx> digital;
  for (const auto& p : prototype_poles(order)) {
    const cplx half = 0.5 * p * bw;
    const cplx root = std::sqrt(half * half - w0 * w0);
    digital.push_back(bilinear(half + root, rate_hz));
    digital.push_back(bilinear(half - root, rate_hz));
  }
  auto sections = pole_sections(digital);
  const double omega0 = 2.0 * std::atan(w0 / (2.0 * rate_hz));
  for (auto& s : sections) {
    // One zero at z = +1 (from s = 0) and one at z = -1 per section.
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    normalise_at(s, omega0);
  }
  return sections;
}

std::vector<double> hamming_sinc(int length, double cutoff_hz, double rate_hz) {
  std::vector<double> h(static_cast<std::size_t>(length));
  const double fc = cutoff_hz / rate_hz;  // cycles per sample
  const double centre = 0.5 * (length - 1);
  double sum = 0.0;
  for (int n = 0; n < length; ++n) {
    const double x = n - centre;
    const double sinc = x == 0.0 ? 2.0 * fc : std::sin(2.0 * kPi * fc * x) / (kPi * x);
    const double w = length == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * kPi * n / (length - 1));
    h[static_cast<std::size_t>(n)] = sinc * w;
    sum += h[static_cast<std::size_t>(n)];
  }
  for (auto& v : h) v /= sum;
  return h;
}

// Least-squares smoothing weights: the value at the window centre of the
// degree-`poly` polynomial fitted to the window. Solved through a QR of the
// scaled Vandermonde matrix.
std::vector<double> savgol_weights(int window, int poly) {
  const int half = window / 2;
  const double scale = half > 0 ? static_cast<double>(half) : 1.0;
  Eigen::MatrixXd a(window, poly + 1);
  for (int i = 0; i < window; ++i) {
    const double x = (i - half) / scale;
    double v = 1.0;
    for (int j = 0; j <= poly; ++j) {
      a(i, j) = v;
      v *= x;
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(poly + 1).triangularView<Eigen::Upper>();
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(poly + 1);
  e0(0) = 1.0;
  const Eigen::VectorXd u = r.transpose().triangularView<Eigen::Lower>().solve(e0);
  const Eigen::VectorXd v = r.triangularView<Eigen::Upper>().solve(u);
  const Eigen::VectorXd c = a * v;
  return {c.data(), c.data() + c.size()};
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

std::vector<double> convolve_centred(std::span<const double> taps, std::span<const double> x) {
  const std::size_t n = x.size();
  const auto len = static_cast<std::ptrdiff_t>(taps.size());
  const std::ptrdiff_t centre = (len - 1) / 2;
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const auto base = static_cast<std::ptrdiff_t>(i) - centre;
    const bool interior = base >= 0 && base + len <= static_cast<std::ptrdiff_t>(n);
    if (interior) {
      const double* xp = x.data() + base;
      for (std::ptrdiff_t k = 0; k < len; ++k) acc += taps[static_cast<std::size_t>(k)] * xp[k];
    } else {
      for (std::ptrdiff_t k = 0; k < len; ++k) {
        acc += taps[static_cast<std::size_t>(k)] * x[reflect_index(base + k, n)];
      }
    }
    y[i] = acc;
  }
  return y;
}

// Steady-state TDF-II states of each section for a unit step at the input
// of the cascade.
std::vector<std::array<double, 2>> step_states(const std::vector<Biquad>& sections) {
  std::vector<std::array<double, 2>> zi;
  double level = 1.0;
  for (const auto& s : sections) {
    const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = (s.b2 - s.a2 * g) * level;
    const double z1 = (s.b1 + s.b2 - (s.a1 + s.a2) * g) * level;
    zi.push_back({z1, z2});
    level *= g;
  }
  return zi;
}

void sos_pass(const std::vector<Biquad>& sections, const std::vector<std::array<double, 2>>& zi,
              double x0, std::vector<double>& x) {
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const auto& s = sections[k];
    double z1 = zi[k][0] * x0;
    double z2 = zi[k][1] * x0;
    for (auto& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

std::vector<double> filtfilt(const std::vector<Biquad>& sections, std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t pad = std::min<std::size_t>(3 * (2 * sections.size() + 1), n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = step_states(sections);
  sos_pass(sections, zi, ext.front(), ext);
  std::reverse(ext.begin(), ext.end());
  sos_pass(sections, zi, ext.front(), ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace

FilterSpec FilterSpec::butterworth_lowpass(int order, double cutoff_hz) {
  FilterSpec s;
  s.kind = FilterKind::ButterworthLowpass;
  s.order = order;
  s.low_hz = cutoff_hz;
  return s;
}

FilterSpec FilterSpec::butterworth_bandpass(int order, double low_hz, double high_hz) {
  FilterSpec s;
  s.kind = FilterKind::ButterworthBandpass;
  s.order = order;
  s.low_hz = low_hz;
  s.high_hz = high_hz;
  return s;
}

FilterSpec FilterSpec::fir_lowpass(int length, double cutoff_hz) {
  FilterSpec s;
  s.kind = FilterKind::FirLowpass;
  s.length = length;
  s.low_hz = cutoff_hz;
  return s;
}

FilterSpec FilterSpec::savitzky_golay(int window_size, int poly_order) {
  FilterSpec s;
  s.kind = FilterKind::SavitzkyGolay;
  s.window_size = window_size;
  s.poly_order = poly_order;
  return s;
}

std::size_t FilterCoefficients::order() const {
  if (!is_iir()) return taps.size();
  std::size_t poles = 0;
  for (const auto& s : sections) poles += s.a2 != 0.0 ? 2 : 1;
  return poles;
}

std::complex<double> FilterCoefficients::response(double f_hz) const {
  const double omega = 2.0 * kPi * f_hz / rate_hz;
  if (is_iir()) {
    cplx h{1.0, 0.0};
    for (const auto& s : sections) h *= section_response(s, omega);
    return h;
  }
  cplx h{0.0, 0.0};
  const double centre = 0.5 * (static_cast<double>(taps.size()) - 1.0);
  for (std::size_t k = 0; k < taps.size(); ++k) {
    h += taps[k] * std::polar(1.0, -omega * (static_cast<double>(k) - centre));
  }
  return h;
}

FilterCoefficients design_filter(const FilterSpec& spec, double rate_hz) {
  if (!(rate_hz > 0.0)) throw DesignError("sampling rate must be positive");
  FilterCoefficients c;
  c.spec = spec;
  c.rate_hz = rate_hz;
  switch (spec.kind) {
    case FilterKind::ButterworthLowpass:
      if (spec.order < 1) throw DesignError("Butterworth order must be >= 1");
      require_cutoff(spec.low_hz, rate_hz, "cutoff");
      c.sections = butterworth_lowpass(spec.order, spec.low_hz, rate_hz);
      break;
    case FilterKind::ButterworthBandpass:
      if (spec.order < 1) throw DesignError("Butterworth order must be >= 1");
      require_cutoff(spec.low_hz, rate_hz, "lower edge");
      require_cutoff(spec.high_hz, rate_hz, "upper edge");
      if (!(spec.low_hz < spec.high_hz)) throw DesignError("bandpass edges must be increasing");
      c.sections = butterworth_bandpass(spec.order, spec.low_hz, spec.high_hz, rate_hz);
      break;
    case FilterKind::FirLowpass:
      if (spec.length < 1) throw DesignError("FIR length must be positive");
      require_cutoff(spec.low_hz, rate_hz, "cutoff");
      c.taps = hamming_sinc(spec.length, spec.low_hz, rate_hz);
      break;
    case FilterKind::SavitzkyGolay:
      if (spec.window_size < 1 || spec.window_size % 2 == 0) {
        throw DesignError("Savitzky-Golay window must be odd and positive");
      }
      if (spec.poly_order < 0 || spec.window_size <= spec.poly_order) {
        throw DesignError("Savitzky-Golay window must exceed the polynomial order");
      }
      c.taps = savgol_weights(spec.window_size, spec.poly_order);
      break;
  }
  return c;
}

std::vector<double> apply_filter(const FilterCoefficients& coeffs, std::span<const double> x) {
  const std::size_t need = std::max<std::size_t>(1, 3 * coeffs.order());
  if (x.size() < need) {
    throw InsufficientDataError("signal of " + std::to_string(x.size()) + " samples is shorter than " +
                                std::to_string(need) + " (3x filter order)");
  }
  if (coeffs.is_iir()) return filtfilt(coeffs.sections, x);
  return convolve_centred(coeffs.taps, x);
}

SignalChannel apply_filter(const FilterCoefficients& coeffs, const SignalChannel& channel) {
  if (channel.samples.empty()) throw InsufficientDataError("empty channel");
  if (std::abs(channel.rate_hz - coeffs.rate_hz) > 1e-9 * channel.rate_hz) {
    throw DataError("filter designed for " + std::to_string(coeffs.rate_hz) + " Hz applied to " +
                    std::string(to_string(channel.modality)) + " at " + std::to_string(channel.rate_hz) +
                    " Hz");
  }
  SignalChannel out = channel;
  out.samples = apply_filter(coeffs, channel.samples);
  return out;
}

std::vector<FilterSpec> preprocessing_chain(Device device, Modality modality) {
  using F = FilterSpec;
  if (device == Device::Wrist) {
    switch (modality) {
      case Modality::ACC_X:
      case Modality::ACC_Y:
      case Modality::ACC_Z: return {F::fir_lowpass(64, 0.4)};
      case Modality::BVP: return {F::butterworth_bandpass(3, 0.7, 3.7)};
      case Modality::EDA: return {F::butterworth_lowpass(6, 1.0)};
      case Modality::TEMP: return {F::savitzky_golay(11, 3)};
      default: return {};
    }
  }
  switch (modality) {
    case Modality::ACC_X:
    case Modality::ACC_Y:
    case Modality::ACC_Z: return {F::savitzky_golay(31, 5)};
    case Modality::ECG: return {F::savitzky_golay(11, 3), F::butterworth_bandpass(3, 0.7, 3.7)};
    case Modality::EMG: return {F::savitzky_golay(11, 3)};
    case Modality::EDA: return {F::savitzky_golay(11, 3), F::butterworth_lowpass(2, 5.0)};
    case Modality::RESP: return {F::savitzky_golay(11, 3), F::butterworth_bandpass(3, 0.1, 0.35)};
    case Modality::TEMP: return {F::savitzky_golay(11, 3)};
    default: return {};
  }
}

std::vector<FilterSpec> peak_channel_chain() { return {FilterSpec::butterworth_lowpass(3, 0.5)}; }

SubjectRecord preprocess(const SubjectRecord& record) {
  SubjectRecord out;
  out.subject_id = record.subject_id;
  out.device = record.device;
  out.label_rate_hz = record.label_rate_hz;
  out.labels = record.labels;
  for (const auto& [m, ch] : record.channels) {
    SignalChannel filtered = ch;
    for (const auto& spec : preprocessing_chain(record.device, m)) {
      filtered = apply_filter(design_filter(spec, ch.rate_hz), filtered);
    }
    if (record.device == Device::Chest && m == Modality::EMG) {
      SignalChannel peak = filtered;
      peak.modality = Modality::EMG_PEAK;
      for (const auto& spec : peak_channel_chain()) peak = apply_filter(design_filter(spec, ch.rate_hz), peak);
      out.channels.insert_or_assign(Modality::EMG_PEAK, std::move(peak));
    }
    if (m == Modality::EMG_PEAK && out.channels.contains(Modality::EMG_PEAK)) continue;
    out.channels.insert_or_assign(m, std::move(filtered));
  }
  return out;
}

void SegmentationSpec::validate() const {
  if (!(window_s > 0.0) || !(slide_s > 0.0) || slide_s > window_s) {
    throw ConfigError("segmentation requires window > 0, slide > 0 and slide <= window");
  }
}

std::size_t window_count(double duration_s, const SegmentationSpec& spec) {
  spec.validate();
  if (duration_s + 1e-9 < spec.window_s) return 0;
  return static_cast<std::size_t>(std::floor((duration_s - spec.window_s) / spec.slide_s + 1e-9)) + 1;
}

std::int32_t majority_label(std::span<const std::int32_t> labels) {
  if (labels.empty()) return 0;
  std::vector<std::pair<std::int32_t, std::size_t>> counts;
  auto bump = [&](std::int32_t code) {
    for (auto& [c, n] : counts) {
      if (c == code) {
        ++n;
        return;
      }
    }
    counts.emplace_back(code, 1);
  };
  for (auto code : labels) bump(code);
  std::size_t best = 0;
  for (const auto& [c, n] : counts) best = std::max(best, n);
  std::vector<std::int32_t> tied;
  for (const auto& [c, n] : counts) {
    if (n == best) tied.push_back(c);
  }
  if (tied.size() == 1) return tied.front();

  const auto later = labels.subspan(labels.size() / 2);
  std::size_t best_late = 0;
  std::vector<std::int32_t> late_tied;
  for (auto c : tied) {
    const auto n = static_cast<std::size_t>(std::count(later.begin(), later.end(), c));
    if (n > best_late) {
      best_late = n;
      late_tied = {c};
    } else if (n == best_late) {
      late_tied.push_back(c);
    }
  }
  if (late_tied.size() == 1) return late_tied.front();
  for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
    if (std::find(late_tied.begin(), late_tied.end(), *it) != late_tied.end()) return *it;
  }
  return late_tied.front();
}

std::vector<WindowedSegment> segment(const SubjectRecord& record, const SegmentationSpec& spec) {
  spec.validate();
  const double duration = record.duration_s();
  const std::size_t count = window_count(duration, spec);
  if (count == 0) {
    throw InsufficientDataError("record " + record.subject_id + " lasts " + std::to_string(duration) +
                                " s, shorter than one " + std::to_string(spec.window_s) + " s window");
  }
  std::vector<WindowedSegment> out;
  for (std::size_t w = 0; w < count; ++w) {
    const double start = static_cast<double>(w) * spec.slide_s;
    const auto l0 = static_cast<std::size_t>(std::llround(start * record.label_rate_hz));
    const auto ln = static_cast<std::size_t>(std::llround(spec.window_s * record.label_rate_hz));
    std::int32_t label = 0;
    if (!record.labels.empty()) {
      const std::size_t end = std::min(record.labels.size(), l0 + ln);
      label = majority_label(std::span<const std::int32_t>(record.labels).subspan(l0, end - std::min(l0, end)));
    }
    if (!is_protocol_label(label)) continue;

    WindowedSegment seg;
    seg.subject_id = record.subject_id;
    seg.device = record.device;
    seg.window_index = w;
    seg.start_s = start;
    seg.window_s = spec.window_s;
    seg.label = label;
    for (const auto& [m, ch] : record.channels) {
      const auto s0 = static_cast<std::size_t>(std::llround(start * ch.rate_hz));
      const auto n = static_cast<std::size_t>(std::llround(spec.window_s * ch.rate_hz));
      const std::size_t begin = std::min(s0, ch.samples.size());
      const std::size_t len = std::min(n, ch.samples.size() - begin);
      seg.channels.emplace(m, ChannelView{m, ch.rate_hz, std::span<const double>(ch.samples).subspan(begin, len)});
    }
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace selfcare::dsp
