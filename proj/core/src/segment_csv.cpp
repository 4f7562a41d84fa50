#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "selfcare/dataset.hpp"
#include "selfcare/errors.hpp"

namespace selfcare::dataset {
namespace {

double parse_number(std::string_view field, const std::string& where) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw FormatError(where + ": '" + std::string(field) + "' is not a finite number");
  }
  return v;
}

}  // namespace

SubjectRecord read_segment_csv(const std::filesystem::path& file, Device device) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open segment file " + file.string());
  SubjectRecord rec;
  rec.subject_id = file.stem().string();
  rec.device = device;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = file.string() + ":" + std::to_string(lineno);
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 3) throw FormatError(where + ": expected MODALITY,rate_hz,samples...");
    std::string name(fields[0]);
    while (!name.empty() && (name.back() == ' ' || name.back() == '\r')) name.pop_back();
    const auto m = parse_modality(name);
    if (!m) throw FormatError(where + ": unknown modality '" + name + "'");
    if (rec.channels.contains(*m)) throw FormatError(where + ": duplicate channel " + name);
    SignalChannel ch;
    ch.modality = *m;
    ch.device = device;
    ch.rate_hz = parse_number(fields[1], where);
    if (!(ch.rate_hz > 0.0)) throw FormatError(where + ": rate must be positive");
    for (std::size_t i = 2; i < fields.size(); ++i) ch.samples.push_back(parse_number(fields[i], where));
    rec.channels.emplace(*m, std::move(ch));
  }
  if (rec.channels.empty()) throw FormatError(file.string() + ": no channels");
  // A constant protocol label lets the record pass through segmentation.
  double duration = 0.0;
  for (const auto& [m, ch] : rec.channels) duration = duration == 0.0 ? ch.duration_s() : std::min(duration, ch.duration_s());
  rec.label_rate_hz = 1.0;
  rec.labels.assign(static_cast<std::size_t>(std::ceil(duration)), kBaselineCode);
  return rec;
}

void write_segment_csv(const std::filesystem::path& file, const SubjectRecord& record) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  out << "# subject " << record.subject_id << ", " << to_string(record.device) << '\n';
  out.precision(9);
  for (const auto& [m, ch] : record.channels) {
    out << to_string(m) << ',' << ch.rate_hz;
    for (double v : ch.samples) out << ',' << v;
    out << '\n';
  }
  if (!out) throw Error("failed writing " + file.string());
}

SubjectRecord slice_record(const SubjectRecord& record, double start_s, double length_s) {
  if (!(start_s >= 0.0) || !(length_s > 0.0) || start_s + length_s > record.duration_s() + 1e-9) {
    throw InsufficientDataError("slice outside the record");
  }
  SubjectRecord out;
  out.subject_id = record.subject_id;
  out.device = record.device;
  out.label_rate_hz = record.label_rate_hz;
  auto cut = [&](auto& dst, const auto& src, double rate) {
    const auto b = static_cast<std::size_t>(std::llround(start_s * rate));
    const auto n = static_cast<std::size_t>(std::llround(length_s * rate));
    dst.assign(src.begin() + static_cast<std::ptrdiff_t>(b), src.begin() + static_cast<std::ptrdiff_t>(std::min(b + n, src.size())));
  };
  for (const auto& [m, ch] : record.channels) {
    SignalChannel c = ch;
    cut(c.samples, ch.samples, ch.rate_hz);
    out.channels.emplace(m, std::move(c));
  }
  cut(out.labels, record.labels, record.label_rate_hz);
  return out;
}

}  // namespace selfcare::dataset
