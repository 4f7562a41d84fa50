#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "selfcare/types.hpp"

namespace selfcare::dataset {

enum class GeneratorKind : std::uint8_t { Constant, Sine, Autoregressive };

// offset + amplitude * sin(phase) + AR(1) noise. Constant ignores both the
// carrier and the noise; Autoregressive ignores the carrier.
struct ChannelGenerator {
  GeneratorKind kind = GeneratorKind::Sine;
  double offset = 0.0;
  double amplitude = 1.0;
  double frequency_hz = 1.0;
  // Std of an AR(1) wander on the carrier frequency (Hz).
  double frequency_jitter_hz = 0.0;
  double ar_coefficient = 0.9;
  // Stationary std of the AR(1) noise term.
  double noise_std = 0.0;

  // Stationary variance of the generated signal around its offset.
  double variance() const;
};

struct ModalityTrack {
  Modality modality = Modality::BVP;
  double rate_hz = 64.0;
  ChannelGenerator base;
  // Generator used while the label schedule reports the given code.
  std::map<std::int32_t, ChannelGenerator> per_label;
};

struct LabelSpan {
  double start_s = 0.0;
  double end_s = 0.0;
  std::int32_t code = 0;
};

// Extra white noise with std = multiplier * (generator std) added to the
// listed modalities over [start_s, end_s).
struct Burst {
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<Modality> modalities;
  double multiplier = 1.0;
};

struct SyntheticScenario {
  std::string subject_id = "SYN";
  Device device = Device::Wrist;
  double duration_s = 60.0;
  double label_rate_hz = 4.0;
  std::vector<ModalityTrack> tracks;
  // Time not covered by a span is labelled 0 ("other").
  std::vector<LabelSpan> labels;
  std::vector<Burst> bursts;

  // Throws ConfigError.
  void validate() const;
};

// Pure function of (scenario, seed). Burst noise draws from a separate
// stream, so a zero multiplier reproduces the baseline exactly.
SubjectRecord generate_synthetic(const SyntheticScenario& scenario, std::uint64_t seed);

// Parameters of the built-in demonstration store: physiological carriers
// shift with the protocol label, and motion bursts (more frequent under
// stress) hit ACC and, for some kinds, corrupt a physiological channel.
struct DemoOptions {
  Device device = Device::Wrist;
  std::size_t subjects = 6;
  std::uint64_t seed = 1;
  double baseline_s = 1200.0;
  double stress_s = 600.0;
  double amusement_s = 400.0;
};

SyntheticScenario make_demo_scenario(const DemoOptions& options, std::size_t subject_index);
std::vector<SubjectRecord> generate_demo_store(const DemoOptions& options);

}  // namespace selfcare::dataset
