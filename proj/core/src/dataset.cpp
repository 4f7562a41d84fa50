#include "selfcare/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "selfcare/errors.hpp"

namespace selfcare::dataset {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kManifest = "manifest.json";
constexpr int kFormatVersion = 1;

template <typename T>
T from_le(const unsigned char* p) {
  static_assert(sizeof(T) == 4);
  std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) |
                    (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<T>(v);
}

template <typename T>
void to_le(T value, unsigned char* p) {
  static_assert(sizeof(T) == 4);
  const auto v = std::bit_cast<std::uint32_t>(value);
  p[0] = static_cast<unsigned char>(v & 0xFFu);
  p[1] = static_cast<unsigned char>((v >> 8) & 0xFFu);
  p[2] = static_cast<unsigned char>((v >> 16) & 0xFFu);
  p[3] = static_cast<unsigned char>((v >> 24) & 0xFFu);
}

std::vector<unsigned char> read_payload(const fs::path& file, std::uint64_t expected_count,
                                        std::string_view what) {
  std::error_code ec;
  const auto bytes = fs::file_size(file, ec);
  if (ec) throw IntegrityError(std::string(what) + ": cannot read " + file.string());
  if (bytes != 4 * expected_count) {
    throw IntegrityError(std::string(what) + ": " + file.string() + " has " + std::to_string(bytes) +
                         " bytes, expected " + std::to_string(4 * expected_count));
  }
  std::vector<unsigned char> buf(bytes);
  std::ifstream in(file, std::ios::binary);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes))) {
    throw IntegrityError(std::string(what) + ": short read from " + file.string());
  }
  return buf;
}

void check_size(const fs::path& file, std::uint64_t expected_count, std::string_view what) {
  std::error_code ec;
  const auto bytes = fs::file_size(file, ec);
  if (ec) throw IntegrityError(std::string(what) + ": missing payload " + file.string());
  if (bytes != 4 * expected_count) {
    throw IntegrityError(std::string(what) + ": " + file.string() + " has " + std::to_string(bytes) +
                         " bytes, expected " + std::to_string(4 * expected_count));
  }
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw FormatError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": bad value for '" + key + "': " + e.what());
  }
}

std::string channel_label(const std::string& subject, Device d, Modality m) {
  return subject + "/" + std::string(to_string(d)) + "/" + std::string(to_string(m));
}

DeviceEntry parse_device_entry(const json& j, const std::string& subject) {
  DeviceEntry dev;
  const auto where = "subject " + subject;
  const auto dname = require<std::string>(j, "device", where);
  const auto d = parse_device(dname);
  if (!d) throw FormatError(where + ": unknown device '" + dname + "'");
  dev.device = *d;
  dev.label_rate_hz = require<double>(j, "label_rate_hz", where);
  dev.label_count = require<std::uint64_t>(j, "label_count", where);
  dev.label_file = require<std::string>(j, "label_file", where);
  if (!(dev.label_rate_hz > 0.0)) throw FormatError(where + ": label_rate_hz must be positive");
  if (!j.contains("channels") || !j["channels"].is_array()) {
    throw FormatError(where + ": 'channels' must be an array");
  }
  for (const auto& cj : j["channels"]) {
    ChannelEntry ch;
    const auto mname = require<std::string>(cj, "modality", where);
    const auto m = parse_modality(mname);
    if (!m) throw FormatError(where + ": unknown modality '" + mname + "'");
    ch.modality = *m;
    ch.rate_hz = require<double>(cj, "rate_hz", where);
    ch.sample_count = require<std::uint64_t>(cj, "sample_count", where);
    ch.file = require<std::string>(cj, "file", where);
    const auto dtype = require<std::string>(cj, "dtype", where);
    if (dtype != "f32le") throw FormatError(where + ": unsupported dtype '" + dtype + "'");
    if (!(ch.rate_hz > 0.0)) {
      throw FormatError(channel_label(subject, dev.device, ch.modality) + ": rate_hz must be positive");
    }
    dev.channels.push_back(std::move(ch));
  }
  return dev;
}

void validate_device(const fs::path& root, const std::string& subject, const DeviceEntry& dev) {
  if (dev.channels.empty()) {
    throw IntegrityError("subject " + subject + "/" + std::string(to_string(dev.device)) +
                         ": no channels");
  }
  double min_rate = std::numeric_limits<double>::infinity();
  double min_dur = std::numeric_limits<double>::infinity();
  double max_dur = 0.0;
  const ChannelEntry* shortest = nullptr;
  const ChannelEntry* longest = nullptr;
  for (const auto& ch : dev.channels) {
    const auto label = channel_label(subject, dev.device, ch.modality);
    if (ch.sample_count == 0) throw IntegrityError(label + ": empty channel");
    check_size(root / ch.file, ch.sample_count, label);
    const double dur = static_cast<double>(ch.sample_count) / ch.rate_hz;
    min_rate = std::min(min_rate, ch.rate_hz);
    if (dur < min_dur) {
      min_dur = dur;
      shortest = &ch;
    }
    if (dur > max_dur) {
      max_dur = dur;
      longest = &ch;
    }
  }
  if (max_dur - min_dur > 1.0 / min_rate + 1e-9) {
    throw IntegrityError(channel_label(subject, dev.device, shortest->modality) + ": duration " +
                         std::to_string(min_dur) + " s disagrees with " +
                         std::string(to_string(longest->modality)) + " (" + std::to_string(max_dur) +
                         " s)");
  }
  check_size(root / dev.label_file, dev.label_count,
             "subject " + subject + "/" + std::string(to_string(dev.device)) + "/labels");
}

}  // namespace

const DeviceEntry* SubjectEntry::find(Device d) const {
  for (const auto& dev : devices) {
    if (dev.device == d) return &dev;
  }
  return nullptr;
}

DatasetStore DatasetStore::open(const fs::path& root) {
  const auto manifest_path = root / kManifest;
  if (!fs::is_regular_file(manifest_path)) {
    throw FormatError("no manifest.json in " + root.string());
  }
  json manifest;
  try {
    std::ifstream in(manifest_path);
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("manifest.json is not valid JSON: " + std::string(e.what()));
  }
  if (!manifest.is_object()) throw FormatError("manifest.json must hold an object");
  if (manifest.contains("format_version") && manifest["format_version"] != kFormatVersion) {
    throw FormatError("unsupported manifest format_version");
  }
  if (!manifest.contains("subjects") || !manifest["subjects"].is_array()) {
    throw FormatError("manifest.json: 'subjects' must be an array");
  }

  DatasetStore store;
  store.root_ = root;
  for (const auto& sj : manifest["subjects"]) {
    SubjectEntry subject;
    subject.id = require<std::string>(sj, "id", "manifest subject");
    if (!sj.contains("devices") || !sj["devices"].is_array()) {
      throw FormatError("subject " + subject.id + ": 'devices' must be an array");
    }
    for (const auto& dj : sj["devices"]) subject.devices.push_back(parse_device_entry(dj, subject.id));
    for (const auto& dev : subject.devices) validate_device(root, subject.id, dev);
    const bool duplicate = std::any_of(store.subjects_.begin(), store.subjects_.end(),
                                       [&](const SubjectEntry& s) { return s.id == subject.id; });
    if (duplicate) throw FormatError("duplicate subject id " + subject.id);
    store.subjects_.push_back(std::move(subject));
  }
  return store;
}

std::vector<std::string> DatasetStore::subject_ids() const {
  std::vector<std::string> ids;
  ids.reserve(subjects_.size());
  for (const auto& s : subjects_) ids.push_back(s.id);
  return ids;
}

const SubjectEntry& DatasetStore::subject(std::string_view id) const {
  for (const auto& s : subjects_) {
    if (s.id == id) return s;
  }
  throw DataError("unknown subject " + std::string(id));
}

bool DatasetStore::has(std::string_view id, Device device) const {
  for (const auto& s : subjects_) {
    if (s.id == id) return s.find(device) != nullptr;
  }
  return false;
}

SubjectRecord DatasetStore::load(std::string_view id, Device device) const {
  const auto& s = subject(id);
  const auto* dev = s.find(device);
  if (!dev) {
    throw DataError("subject " + s.id + " has no " + std::string(to_string(device)) + " device");
  }
  SubjectRecord rec;
  rec.subject_id = s.id;
  rec.device = device;
  rec.label_rate_hz = dev->label_rate_hz;
  rec.labels = read_i32le(root_ / dev->label_file, dev->label_count, s.id + "/labels");
  for (const auto& ch : dev->channels) {
    SignalChannel sc;
    sc.modality = ch.modality;
    sc.device = device;
    sc.rate_hz = ch.rate_hz;
    sc.samples = read_f32le(root_ / ch.file, ch.sample_count, channel_label(s.id, device, ch.modality));
    rec.channels.emplace(ch.modality, std::move(sc));
  }
  return rec;
}

std::vector<double> read_f32le(const fs::path& file, std::uint64_t expected_count, std::string_view what) {
  const auto buf = read_payload(file, expected_count, what);
  std::vector<double> out(expected_count);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = from_le<float>(buf.data() + 4 * i);
  return out;
}

std::vector<std::int32_t> read_i32le(const fs::path& file, std::uint64_t expected_count,
                                     std::string_view what) {
  const auto buf = read_payload(file, expected_count, what);
  std::vector<std::int32_t> out(expected_count);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = from_le<std::int32_t>(buf.data() + 4 * i);
  return out;
}

void write_f32le(const fs::path& file, std::span<const double> values) {
  std::vector<unsigned char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    to_le(static_cast<float>(values[i]), buf.data() + 4 * i);
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("cannot write " + file.string());
}

void write_i32le(const fs::path& file, std::span<const std::int32_t> values) {
  std::vector<unsigned char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) to_le(values[i], buf.data() + 4 * i);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("cannot write " + file.string());
}

void write_store(const fs::path& root, std::span<const SubjectRecord> records) {
  fs::create_directories(root);
  // Preserve first-seen subject order.
  std::vector<std::string> order;
  std::map<std::string, json> devices;
  for (const auto& rec : records) {
    if (!devices.contains(rec.subject_id)) {
      order.push_back(rec.subject_id);
      devices[rec.subject_id] = json::array();
    }
    const auto dname = std::string(to_string(rec.device));
    fs::create_directories(root / rec.subject_id);
    json dev;
    dev["device"] = dname;
    dev["label_rate_hz"] = rec.label_rate_hz;
    dev["label_count"] = rec.labels.size();
    dev["label_file"] = rec.subject_id + "/" + dname + "_labels.i32";
    write_i32le(root / dev["label_file"].get<std::string>(), rec.labels);
    dev["channels"] = json::array();
    for (const auto& [m, ch] : rec.channels) {
      json cj;
      cj["modality"] = std::string(to_string(m));
      cj["rate_hz"] = ch.rate_hz;
      cj["sample_count"] = ch.samples.size();
      cj["dtype"] = "f32le";
      cj["file"] = rec.subject_id + "/" + dname + "_" + std::string(to_string(m)) + ".f32";
      write_f32le(root / cj["file"].get<std::string>(), ch.samples);
      dev["channels"].push_back(std::move(cj));
    }
    devices[rec.subject_id].push_back(std::move(dev));
  }
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["subjects"] = json::array();
  for (const auto& id : order) {
    manifest["subjects"].push_back({{"id", id}, {"devices", devices[id]}});
  }
  std::ofstream out(root / kManifest, std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw FormatError("cannot write manifest in " + root.string());
}

}  // namespace selfcare::dataset
