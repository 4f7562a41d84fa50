#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "selfcare/eval.hpp"

namespace selfcare::eval {

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

// What a report needs beyond the results themselves.
struct RunInfo {
  std::string command;  // "eval" or "benchmark"
  std::string dataset;
  std::uint64_t seed = 0;
  std::vector<std::string> subjects;
  std::string config_text;  // serialised fusion config, or benchmark settings

  // Hash over everything that determines the results.
  std::uint64_t fingerprint() const;
};

// Deterministic JSON documents (no timings; those go to timing.json).
std::string report_json(const SelfCareResult& result, const RunInfo& info);
std::string report_json(const BenchmarkResult& result, const RunInfo& info);

// Human-readable tables.
std::string format_table(const SelfCareResult& result);
// Branch rows by family columns, accuracy and macro F1 per cell.
std::string format_table(const BenchmarkResult& result);

std::string predictions_csv(const SelfCareResult& result);
std::string timing_json(double seconds, int jobs);

void write_text(const std::filesystem::path& file, std::string_view text);

}  // namespace selfcare::eval
