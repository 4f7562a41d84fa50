#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selfcare {

// Raw physical channels. EMG_PEAK is derived during preprocessing (the
// low-passed EMG used for peak features) and never appears in raw stores
// written by the converter, though the store format accepts it.
enum class Modality : std::uint8_t {
  ACC_X,
  ACC_Y,
  ACC_Z,
  BVP,
  ECG,
  EDA,
  EMG,
  RESP,
  TEMP,
  EMG_PEAK,
};

enum class Device : std::uint8_t { Wrist, Chest };

// Branch-level sensors: the three ACC axes collapse into one sensor.
enum class Sensor : std::uint8_t { ACC, BVP, ECG, RESP, EMG, EDA, TEMP };

inline constexpr std::size_t kSensorCount = 7;

std::string_view to_string(Modality m);
std::string_view to_string(Device d);
std::string_view to_string(Sensor s);
std::optional<Modality> parse_modality(std::string_view name);
std::optional<Device> parse_device(std::string_view name);
std::optional<Sensor> parse_sensor(std::string_view name);

// Raw channels a sensor reads from a segment.
std::vector<Modality> sensor_modalities(Sensor s);

// Protocol label codes as stored on disk. Anything else is "other".
inline constexpr std::int32_t kBaselineCode = 1;
inline constexpr std::int32_t kStressCode = 2;
inline constexpr std::int32_t kAmusementCode = 3;

bool is_protocol_label(std::int32_t code);

enum class Task : std::uint8_t { TwoClass = 2, ThreeClass = 3 };

std::optional<Task> parse_task(int classes);
inline int class_count(Task t) { return static_cast<int>(t); }

// 3-class: baseline=0, stress=1, amusement=2.
// 2-class: non-stress (baseline, amusement)=0, stress=1.
std::optional<int> class_index(std::int32_t code, Task task);
std::string_view class_name(int index, Task task);

struct SignalChannel {
  Modality modality = Modality::ACC_X;
  Device device = Device::Wrist;
  double rate_hz = 1.0;
  std::vector<double> samples;

  double duration_s() const { return static_cast<double>(samples.size()) / rate_hz; }
};

struct SubjectRecord {
  std::string subject_id;
  Device device = Device::Wrist;
  std::map<Modality, SignalChannel> channels;
  double label_rate_hz = 1.0;
  std::vector<std::int32_t> labels;

  bool has(Modality m) const { return channels.contains(m); }
  // Throws MissingModalityError.
  const SignalChannel& channel(Modality m) const;
  // Shortest of all channel and label durations.
  double duration_s() const;
};

// Non-owning slice of a channel. Valid only while the record it was cut
// from is alive.
struct ChannelView {
  Modality modality = Modality::ACC_X;
  double rate_hz = 1.0;
  std::span<const double> samples;

  double duration_s() const { return static_cast<double>(samples.size()) / rate_hz; }
};

struct WindowedSegment {
  std::string subject_id;
  Device device = Device::Wrist;
  std::size_t window_index = 0;
  double start_s = 0.0;
  double window_s = 0.0;
  std::int32_t label = 0;
  std::map<Modality, ChannelView> channels;

  bool has(Modality m) const { return channels.contains(m); }
  // Throws MissingModalityError.
  const ChannelView& channel(Modality m) const;
};

}  // namespace selfcare
