#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfcare/types.hpp"

namespace selfcare::dataset {

// On-disk layout of a converted store:
//
//   <root>/manifest.json
//   <root>/<subject>/<device>_<MODALITY>.f32   raw little-endian float32
//   <root>/<subject>/<device>_labels.i32       raw little-endian int32
//
// Every payload's byte length must equal 4 * its declared count.

struct ChannelEntry {
  Modality modality = Modality::ACC_X;
  double rate_hz = 0.0;
  std::uint64_t sample_count = 0;
  std::string file;  // relative to the store root
};

struct DeviceEntry {
  Device device = Device::Wrist;
  double label_rate_hz = 0.0;
  std::uint64_t label_count = 0;
  std::string label_file;
  std::vector<ChannelEntry> channels;
};

struct SubjectEntry {
  std::string id;
  std::vector<DeviceEntry> devices;

  const DeviceEntry* find(Device d) const;
};

// Immutable view over a converted store. Construction validates the manifest
// and every payload's size; sample data is read on demand by load(), so a
// store can be shared between threads.
class DatasetStore {
 public:
  // Throws FormatError (missing/malformed manifest) or IntegrityError
  // (payload size or duration mismatch, naming the offending channel).
  static DatasetStore open(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const std::vector<SubjectEntry>& subjects() const { return subjects_; }
  std::vector<std::string> subject_ids() const;
  std::size_t size() const { return subjects_.size(); }

  const SubjectEntry& subject(std::string_view id) const;
  bool has(std::string_view id, Device device) const;

  SubjectRecord load(std::string_view id, Device device) const;

 private:
  std::filesystem::path root_;
  std::vector<SubjectEntry> subjects_;
};

inline DatasetStore load_store(const std::filesystem::path& root) { return DatasetStore::open(root); }

// Writes records (one per subject/device pair) as a converted store.
// Samples are narrowed to float32; a store written from loaded records is
// byte-identical to its source.
void write_store(const std::filesystem::path& root, std::span<const SubjectRecord> records);

// Little-endian float32 / int32 payload helpers.
std::vector<double> read_f32le(const std::filesystem::path& file, std::uint64_t expected_count,
                               std::string_view what);
std::vector<std::int32_t> read_i32le(const std::filesystem::path& file, std::uint64_t expected_count,
                                     std::string_view what);
void write_f32le(const std::filesystem::path& file, std::span<const double> values);
void write_i32le(const std::filesystem::path& file, std::span<const std::int32_t> values);

// Single-segment CSV used by `selfcare predict`: one line per channel,
//
//   MODALITY,rate_hz,v0,v1,...
//
// Blank lines and lines starting with '#' are ignored. Throws FormatError
// on unknown modalities, duplicate channels or non-numeric fields.
SubjectRecord read_segment_csv(const std::filesystem::path& file, Device device);
void write_segment_csv(const std::filesystem::path& file, const SubjectRecord& record);

// Copy of [start_s, start_s + length_s) of every channel and the labels.
SubjectRecord slice_record(const SubjectRecord& record, double start_s, double length_s);

}  // namespace selfcare::dataset
