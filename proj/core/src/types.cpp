#include "selfcare/types.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <limits>
#include <utility>

#include "selfcare/errors.hpp"

namespace selfcare {
namespace {

constexpr std::array<std::pair<Modality, std::string_view>, 10> kModalityNames{{
    {Modality::ACC_X, "ACC_X"},
    {Modality::ACC_Y, "ACC_Y"},
    {Modality::ACC_Z, "ACC_Z"},
    {Modality::BVP, "BVP"},
    {Modality::ECG, "ECG"},
    {Modality::EDA, "EDA"},
    {Modality::EMG, "EMG"},
    {Modality::RESP, "RESP"},
    {Modality::TEMP, "TEMP"},
    {Modality::EMG_PEAK, "EMG_PEAK"},
}};

constexpr std::array<std::pair<Sensor, std::string_view>, kSensorCount> kSensorNames{{
    {Sensor::ACC, "ACC"},
    {Sensor::BVP, "BVP"},
    {Sensor::ECG, "ECG"},
    {Sensor::RESP, "RESP"},
    {Sensor::EMG, "EMG"},
    {Sensor::EDA, "EDA"},
    {Sensor::TEMP, "TEMP"},
}};

template <typename Table, typename Key>
std::string_view lookup_name(const Table& table, Key key) {
  for (const auto& [k, name] : table) {
    if (k == key) return name;
  }
  return "?";
}

template <typename Key, typename Table>
std::optional<Key> lookup_key(const Table& table, std::string_view name) {
  for (const auto& [k, n] : table) {
    if (n == name) return k;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Modality m) { return lookup_name(kModalityNames, m); }
std::string_view to_string(Sensor s) { return lookup_name(kSensorNames, s); }

std::string_view to_string(Device d) { return d == Device::Wrist ? "wrist" : "chest"; }

std::optional<Modality> parse_modality(std::string_view name) {
  return lookup_key<Modality>(kModalityNames, name);
}

std::optional<Sensor> parse_sensor(std::string_view name) {
  return lookup_key<Sensor>(kSensorNames, name);
}

std::optional<Device> parse_device(std::string_view name) {
  if (name == "wrist" || name == "WRIST") return Device::Wrist;
  if (name == "chest" || name == "CHEST") return Device::Chest;
  return std::nullopt;
}

std::vector<Modality> sensor_modalities(Sensor s) {
  switch (s) {
    case Sensor::ACC: return {Modality::ACC_X, Modality::ACC_Y, Modality::ACC_Z};
    case Sensor::BVP: return {Modality::BVP};
    case Sensor::ECG: return {Modality::ECG};
    case Sensor::RESP: return {Modality::RESP};
    case Sensor::EMG: return {Modality::EMG, Modality::EMG_PEAK};
    case Sensor::EDA: return {Modality::EDA};
    case Sensor::TEMP: return {Modality::TEMP};
  }
  return {};
}

bool is_protocol_label(std::int32_t code) {
  return code == kBaselineCode || code == kStressCode || code == kAmusementCode;
}

std::optional<Task> parse_task(int classes) {
  if (classes == 2) return Task::TwoClass;
  if (classes == 3) return Task::ThreeClass;
  return std::nullopt;
}

std::optional<int> class_index(std::int32_t code, Task task) {
  if (!is_protocol_label(code)) return std::nullopt;
  if (task == Task::ThreeClass) return code - 1;
  return code == kStressCode ? 1 : 0;
}

std::string_view class_name(int index, Task task) {
  if (task == Task::ThreeClass) {
    switch (index) {
      case 0: return "baseline";
      case 1: return "stress";
      case 2: return "amusement";
      default: return "?";
    }
  }
  switch (index) {
    case 0: return "non-stress";
    case 1: return "stress";
    default: return "?";
  }
}

const SignalChannel& SubjectRecord::channel(Modality m) const {
  auto it = channels.find(m);
  if (it == channels.end()) {
    throw MissingModalityError("subject " + subject_id + " has no channel " +
                               std::string(to_string(m)));
  }
  return it->second;
}

double SubjectRecord::duration_s() const {
  double d = labels.empty() ? std::numeric_limits<double>::infinity()
                            : static_cast<double>(labels.size()) / label_rate_hz;
  for (const auto& [m, ch] : channels) d = std::min(d, ch.duration_s());
  return std::isfinite(d) ? d : 0.0;
}

const ChannelView& WindowedSegment::channel(Modality m) const {
  auto it = channels.find(m);
  if (it == channels.end()) {
    throw MissingModalityError("segment " + subject_id + "#" + std::to_string(window_index) +
                               " has no channel " + std::string(to_string(m)));
  }
  return it->second;
}

}  // namespace selfcare
