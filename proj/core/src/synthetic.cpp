#include "selfcare/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "selfcare/errors.hpp"
#include "selfcare/rng.hpp"

namespace selfcare::dataset {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kJitterCoefficient = 0.995;

const ChannelGenerator& generator_at(const ModalityTrack& track, std::int32_t code) {
  auto it = track.per_label.find(code);
  return it == track.per_label.end() ? track.base : it->second;
}

std::int32_t label_at(const SyntheticScenario& s, double t) {
  for (const auto& span : s.labels) {
    if (t >= span.start_s && t < span.end_s) return span.code;
  }
  return 0;
}

}  // namespace

double ChannelGenerator::variance() const {
  switch (kind) {
    case GeneratorKind::Constant: return 0.0;
    case GeneratorKind::Sine: return 0.5 * amplitude * amplitude + noise_std * noise_std;
    case GeneratorKind::Autoregressive: return noise_std * noise_std;
  }
  return 0.0;
}

void SyntheticScenario::validate() const {
  if (!(duration_s > 0.0)) throw ConfigError("scenario duration must be positive");
  if (!(label_rate_hz > 0.0)) throw ConfigError("scenario label rate must be positive");
  for (const auto& t : tracks) {
    if (!(t.rate_hz > 0.0)) throw ConfigError("track rate must be positive");
    auto check = [](const ChannelGenerator& g) {
      if (std::abs(g.ar_coefficient) >= 1.0) throw ConfigError("AR coefficient must lie in (-1, 1)");
      if (g.noise_std < 0.0 || g.frequency_jitter_hz < 0.0) {
        throw ConfigError("noise levels must be non-negative");
      }
    };
    check(t.base);
    for (const auto& [code, g] : t.per_label) check(g);
  }
  for (const auto& b : bursts) {
    if (b.start_s < 0.0 || b.end_s > duration_s || b.start_s > b.end_s) {
      throw ConfigError("burst must lie within [0, duration]");
    }
    if (b.multiplier < 0.0) throw ConfigError("burst multiplier must be non-negative");
  }
  for (const auto& l : labels) {
    if (l.start_s > l.end_s) throw ConfigError("label span ends before it starts");
  }
}

SubjectRecord generate_synthetic(const SyntheticScenario& scenario, std::uint64_t seed) {
  scenario.validate();
  SubjectRecord rec;
  rec.subject_id = scenario.subject_id;
  rec.device = scenario.device;
  rec.label_rate_hz = scenario.label_rate_hz;

  const auto n_labels = static_cast<std::size_t>(std::llround(scenario.duration_s * scenario.label_rate_hz));
  rec.labels.resize(n_labels);
  for (std::size_t i = 0; i < n_labels; ++i) {
    rec.labels[i] = label_at(scenario, static_cast<double>(i) / scenario.label_rate_hz);
  }

  for (const auto& track : scenario.tracks) {
    const auto tag = static_cast<std::uint64_t>(track.modality);
    NormalSource base_noise(derive_seed(seed, {tag, 1}));
    NormalSource burst_noise(derive_seed(seed, {tag, 2}));

    const auto n = static_cast<std::size_t>(std::llround(scenario.duration_s * track.rate_hz));
    SignalChannel ch;
    ch.modality = track.modality;
    ch.device = scenario.device;
    ch.rate_hz = track.rate_hz;
    ch.samples.resize(n);

    double phase = kTwoPi * base_noise.uniform();
    double ar = base_noise();  // unit-variance start, scaled per generator
    double jitter = base_noise();
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / track.rate_hz;
      const auto& g = generator_at(track, label_at(scenario, t));

      double value = g.offset;
      if (g.kind == GeneratorKind::Sine) value += g.amplitude * std::sin(phase);
      if (g.kind != GeneratorKind::Constant) value += g.noise_std * ar;

      const double f = std::max(0.0, g.frequency_hz + g.frequency_jitter_hz * jitter);
      phase = std::fmod(phase + kTwoPi * f / track.rate_hz, kTwoPi);
      ar = g.ar_coefficient * ar + std::sqrt(1.0 - g.ar_coefficient * g.ar_coefficient) * base_noise();
      jitter = kJitterCoefficient * jitter +
               std::sqrt(1.0 - kJitterCoefficient * kJitterCoefficient) * base_noise();

      const double z = burst_noise();
      for (const auto& b : scenario.bursts) {
        if (t < b.start_s || t >= b.end_s) continue;
        if (std::find(b.modalities.begin(), b.modalities.end(), track.modality) == b.modalities.end()) {
          continue;
        }
        value += b.multiplier * std::sqrt(g.variance()) * z;
      }
      ch.samples[i] = value;
    }
    rec.channels.emplace(track.modality, std::move(ch));
  }
  return rec;
}

namespace {

ChannelGenerator sine(double offset, double amplitude, double freq, double noise, double ar = 0.9,
                      double jitter = 0.0) {
  ChannelGenerator g;
  g.kind = GeneratorKind::Sine;
  g.offset = offset;
  g.amplitude = amplitude;
  g.frequency_hz = freq;
  g.noise_std = noise;
  g.ar_coefficient = ar;
  g.frequency_jitter_hz = jitter;
  return g;
}

ChannelGenerator autoregressive(double offset, double noise, double ar) {
  ChannelGenerator g;
  g.kind = GeneratorKind::Autoregressive;
  g.offset = offset;
  g.noise_std = noise;
  g.ar_coefficient = ar;
  return g;
}

// Per-label carrier parameters for one subject.
struct Physiology {
  double hr_hz[3];
  double eda_level[3];
  double eda_noise[3];
  double temp_level[3];
  double resp_hz[3];
  double emg_noise[3];
};

ModalityTrack labelled_track(Modality m, double rate, const ChannelGenerator& base,
                             const ChannelGenerator (&per_label)[3]) {
  ModalityTrack t;
  t.modality = m;
  t.rate_hz = rate;
  t.base = base;
  for (int c = 0; c < 3; ++c) t.per_label[kBaselineCode + c] = per_label[c];
  return t;
}

}  // namespace

SyntheticScenario make_demo_scenario(const DemoOptions& options, std::size_t subject_index) {
  NormalSource rnd(derive_seed(options.seed, {subject_index, 0xD3E0}));
  auto u = [&] { return rnd.uniform(); };

  SyntheticScenario s;
  s.subject_id = "S" + std::to_string(subject_index + 2);
  s.device = options.device;
  s.label_rate_hz = 4.0;

  // Protocol: other, baseline, other, stress, other, amusement, other.
  const double gap = 30.0;
  double t = gap;
  const double durations[3] = {options.baseline_s * (0.9 + 0.2 * u()), options.stress_s * (0.9 + 0.2 * u()),
                               options.amusement_s * (0.9 + 0.2 * u())};
  const std::int32_t order[3] = {kBaselineCode, kStressCode, kAmusementCode};
  for (int i = 0; i < 3; ++i) {
    s.labels.push_back({t, t + durations[i], order[i]});
    t += durations[i] + gap;
  }
  s.duration_s = std::floor(t);

  Physiology p{};
  const double hr0 = 1.0 + 0.2 * u();
  const double eda0 = 2.0 + 4.0 * u();
  const double temp0 = 32.8 + 0.4 * u();
  const double resp0 = 0.22 + 0.06 * u();
  const double emg0 = 0.05 + 0.03 * u();
  p.hr_hz[0] = hr0;
  p.hr_hz[1] = hr0 + 0.30 + 0.15 * u();
  p.hr_hz[2] = hr0 + 0.08 + 0.08 * u();
  p.eda_level[0] = eda0;
  p.eda_level[1] = eda0 + 0.8 + 0.8 * u();
  p.eda_level[2] = eda0 + 0.2 + 0.3 * u();
  p.eda_noise[0] = 0.04;
  p.eda_noise[1] = 0.10;
  p.eda_noise[2] = 0.06;
  p.temp_level[0] = temp0;
  p.temp_level[1] = temp0 - 0.5 - 0.2 * u();
  p.temp_level[2] = temp0 + 0.3 + 0.1 * u();
  p.resp_hz[0] = resp0;
  p.resp_hz[1] = resp0 + 0.06 + 0.04 * u();
  p.resp_hz[2] = resp0 + 0.02;
  p.emg_noise[0] = emg0;
  p.emg_noise[1] = emg0 * 1.3;
  p.emg_noise[2] = emg0 * 1.1;

  const bool wrist = options.device == Device::Wrist;
  const double acc_rate = wrist ? 32.0 : 100.0;
  const double cardiac_rate = wrist ? 64.0 : 100.0;
  const double slow_rate = wrist ? 4.0 : 100.0;

  ChannelGenerator cardiac[3], eda[3], temp[3];
  for (int c = 0; c < 3; ++c) {
    cardiac[c] = sine(0.0, 1.0, p.hr_hz[c], 0.25, 0.7, 0.03);
    eda[c] = sine(p.eda_level[c], 0.05, 0.01, p.eda_noise[c], 0.98);
    temp[c] = autoregressive(p.temp_level[c], c == 1 ? 0.10 : 0.05, 0.995);
  }
  const Modality cardiac_modality = wrist ? Modality::BVP : Modality::ECG;
  s.tracks.push_back(labelled_track(cardiac_modality, cardiac_rate, cardiac[0], cardiac));
  s.tracks.push_back(labelled_track(Modality::EDA, slow_rate, eda[0], eda));
  s.tracks.push_back(labelled_track(Modality::TEMP, slow_rate, temp[0], temp));

  const double gravity[3] = {0.1, -0.2, 0.97};
  const Modality axes[3] = {Modality::ACC_X, Modality::ACC_Y, Modality::ACC_Z};
  for (int a = 0; a < 3; ++a) {
    ModalityTrack acc;
    acc.modality = axes[a];
    acc.rate_hz = acc_rate;
    acc.base = autoregressive(gravity[a], 0.02, 0.8);
    s.tracks.push_back(std::move(acc));
  }
  if (!wrist) {
    ChannelGenerator resp[3], emg[3];
    for (int c = 0; c < 3; ++c) {
      resp[c] = sine(0.0, 1.0, p.resp_hz[c], 0.1, 0.9, 0.01);
      emg[c] = autoregressive(0.0, p.emg_noise[c], 0.3);
    }
    s.tracks.push_back(labelled_track(Modality::RESP, slow_rate, resp[0], resp));
    s.tracks.push_back(labelled_track(Modality::EMG, slow_rate, emg[0], emg));
  }

  // Context bursts. On the wrist, sideways motion corrupts TEMP and vertical
  // motion corrupts nothing; on the chest, muscle activity (EMG) corrupts ECG
  // or RESP while ACC stays quiet.
  double bt = 0.0;
  while (true) {
    const auto code = [&] {
      for (const auto& l : s.labels)
        if (bt >= l.start_s && bt < l.end_s) return l.code;
      return 0;
    }();
    const double mean_gap = code == kStressCode ? 70.0 : (code == kAmusementCode ? 120.0 : 150.0);
    bt += -mean_gap * std::log(1.0 - u());
    const double len = 4.0 + 12.0 * u();
    if (bt + len >= s.duration_s) break;
    Burst b;
    b.start_s = bt;
    b.end_s = bt + len;
    const bool first_kind = u() < 0.5;
    Burst context;
    context.start_s = b.start_s;
    context.end_s = b.end_s;
    if (wrist) {
      context.modalities = first_kind ? std::vector<Modality>{Modality::ACC_X, Modality::ACC_Y}
                                      : std::vector<Modality>{Modality::ACC_Z};
      context.multiplier = 6.0 + 4.0 * u();
      // Only sideways motion disturbs the skin thermometer.
      if (first_kind) b.modalities = {Modality::TEMP};
    } else {
      context.modalities = {Modality::EMG};
      context.multiplier = 4.0 + 4.0 * u();
      b.modalities = {first_kind ? Modality::ECG : Modality::RESP};
    }
    b.multiplier = first_kind ? 10.0 + 5.0 * u() : 3.0 + 2.0 * u();
    s.bursts.push_back(std::move(context));
    s.bursts.push_back(std::move(b));
    bt += len;
  }
  return s;
}

std::vector<SubjectRecord> generate_demo_store(const DemoOptions& options) {
  std::vector<SubjectRecord> out;
  out.reserve(options.subjects);
  for (std::size_t i = 0; i < options.subjects; ++i) {
    out.push_back(generate_synthetic(make_demo_scenario(options, i), derive_seed(options.seed, {i})));
  }
  return out;
}

}  // namespace selfcare::dataset
