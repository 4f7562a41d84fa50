#include "selfcare/report.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "selfcare/errors.hpp"

namespace selfcare::eval {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t RunInfo::fingerprint() const {
  std::uint64_t h = fnv1a(command);
  h = fnv1a(config_text, h);
  h = fnv1a(std::to_string(seed), h);
  for (const auto& s : subjects) h = fnv1a(s + "\n", h);
  return h;
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json confusion_json(const ConfusionMatrix& cm) {
  json rows = json::array();
  for (int t = 0; t < cm.n_classes(); ++t) {
    json row = json::array();
    for (int p = 0; p < cm.n_classes(); ++p) row.push_back(cm.at(t, p));
    rows.push_back(row);
  }
  return rows;
}

json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

json method_json(const MethodResult& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    json entry = {{"subject", f.subject}, {"confusion", confusion_json(f.confusion)}};
    if (f.confusion.total() > 0) entry["metrics"] = metrics_json(f.metrics);
    folds.push_back(entry);
  }
  return {{"name", r.name},
          {"pooled", {{"confusion", confusion_json(r.pooled)}, {"metrics", metrics_json(r.pooled_metrics)}}},
          {"fold_mean", {{"accuracy", r.fold_mean_accuracy}, {"macro_f1", r.fold_mean_macro_f1}}},
          {"folds", folds}};
}

json header(const RunInfo& info) {
  return {{"command", info.command},       {"dataset", info.dataset},
          {"seed", info.seed},             {"subjects", info.subjects},
          {"config", info.config_text},    {"fingerprint", hex(info.fingerprint())}};
}

std::string pct(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << 100.0 * v;
  return out.str();
}

}  // namespace

std::string report_json(const SelfCareResult& result, const RunInfo& info) {
  json doc = header(info);
  doc["device"] = std::string(to_string(result.config.device));
  doc["task"] = result.config.n_classes();
  doc["fusion"] = std::string(to_string(result.config.fusion));
  doc["delta"] = result.config.delta;
  doc["shortlist"] = result.config.shortlist;
  doc["headline"] = result.headline;
  json methods = json::array();
  for (const auto& m : result.methods) methods.push_back(method_json(m));
  doc["methods"] = methods;
  return doc.dump(2) + "\n";
}

std::string report_json(const BenchmarkResult& result, const RunInfo& info) {
  json doc = header(info);
  doc["device"] = std::string(to_string(result.device));
  doc["task"] = class_count(result.task);
  json cells = json::array();
  for (const auto& c : result.cells) {
    auto m = method_json(c.result);
    m["branch"] = c.branch.id;
    m["family"] = std::string(learners::to_string(c.family));
    m["training_cross_entropy"] = c.training_ce;
    cells.push_back(m);
  }
  doc["cells"] = cells;
  return doc.dump(2) + "\n";
}

std::string format_table(const SelfCareResult& result) {
  std::ostringstream out;
  out << std::left << std::setw(18) << "method" << std::right << std::setw(10) << "accuracy" << std::setw(10)
      << "macro F1" << std::setw(12) << "fold acc" << std::setw(12) << "fold F1" << '\n';
  for (const auto& m : result.methods) {
    out << std::left << std::setw(18) << (m.name == result.headline ? m.name + " *" : m.name) << std::right
        << std::setw(10) << pct(m.pooled_metrics.accuracy) << std::setw(10) << pct(m.pooled_metrics.macro_f1)
        << std::setw(12) << pct(m.fold_mean_accuracy) << std::setw(12) << pct(m.fold_mean_macro_f1) << '\n';
  }
  return out.str();
}

std::string format_table(const BenchmarkResult& result) {
  std::vector<learners::Family> families;
  std::vector<std::string> branches;
  for (const auto& c : result.cells) {
    if (std::find(families.begin(), families.end(), c.family) == families.end()) families.push_back(c.family);
    if (std::find(branches.begin(), branches.end(), c.branch.id) == branches.end()) branches.push_back(c.branch.id);
  }
  std::ostringstream out;
  out << std::left << std::setw(8) << "branch";
  for (auto f : families) out << std::right << std::setw(16) << (std::string(learners::to_string(f)) + " F1/acc");
  out << '\n';
  for (const auto& b : branches) {
    out << std::left << std::setw(8) << b;
    for (auto f : families) {
      const auto* c = result.find(b, f);
      out << std::right << std::setw(16)
          << (c ? pct(c->result.pooled_metrics.macro_f1) + "/" + pct(c->result.pooled_metrics.accuracy) : "-");
    }
    out << '\n';
  }
  return out.str();
}

std::string predictions_csv(const SelfCareResult& result) {
  const auto task = result.config.task;
  std::ostringstream out;
  out << "subject,window_index,truth,predicted,selected";
  for (int c = 0; c < result.config.n_classes(); ++c) out << ",score_" << class_name(c, task);
  out << '\n';
  out << std::setprecision(9);
  for (const auto& p : result.predictions) {
    out << p.subject << ',' << p.window_index << ',' << class_name(p.truth, task) << ','
        << class_name(p.predicted, task) << ',';
    for (std::size_t i = 0; i < p.selected.size(); ++i) out << (i ? ";" : "") << p.selected[i];
    for (double s : p.scores) out << ',' << s;
    out << '\n';
  }
  return out.str();
}

std::string timing_json(double seconds, int jobs) {
  return json{{"seconds", seconds}, {"jobs", jobs}}.dump(2) + "\n";
}

void write_text(const std::filesystem::path& file, std::string_view text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
  if (!out) throw Error("failed writing " + file.string());
}

}  // namespace selfcare::eval
