#include <algorithm>
#include <numeric>

#include "selfcare/errors.hpp"
#include "selfcare/fusion.hpp"

namespace selfcare::fusion {
namespace {

using S = Sensor;

BranchSpec make(std::string id, Device device, std::vector<Sensor> sensors) {
  std::sort(sensors.begin(), sensors.end());
  const auto family = device == Device::Wrist ? learners::Family::RF : learners::Family::AB;
  return {std::move(id), device, std::move(sensors), family};
}

std::vector<BranchSpec> build_wrist() {
  const Device w = Device::Wrist;
  return {
      make("WB1", w, {S::BVP, S::EDA, S::TEMP}), make("WB2", w, {S::ACC, S::BVP, S::EDA}),
      make("WB3", w, {S::BVP, S::EDA}),          make("WB4", w, {S::ACC, S::BVP}),
      make("WB5", w, {S::ACC, S::EDA}),
  };
}

std::vector<BranchSpec> build_chest() {
  const std::vector<std::vector<Sensor>> sets = {
      {S::ECG, S::RESP, S::EMG, S::EDA, S::TEMP},  // CB1
      {S::ACC, S::ECG, S::RESP, S::EMG, S::TEMP},
      {S::ACC, S::RESP, S::EMG, S::TEMP},
      {S::ACC, S::ECG, S::RESP, S::EMG},
      {S::ACC, S::ECG, S::RESP, S::EDA},  // CB5
      {S::ACC, S::ECG, S::EMG, S::TEMP},
      {S::ACC, S::ECG, S::EMG, S::EDA},
      {S::ACC, S::RESP, S::EDA, S::TEMP},
      {S::ACC, S::ECG, S::EDA, S::TEMP},
      {S::ECG, S::RESP, S::EMG, S::TEMP},  // CB10
      {S::ECG, S::RESP, S::EMG, S::EDA},
      {S::ECG, S::EMG, S::EDA, S::TEMP},
      {S::ECG, S::RESP, S::EDA, S::TEMP},
      {S::RESP, S::EMG, S::EDA, S::TEMP},
      {S::ACC, S::EDA, S::TEMP},  // CB15
      {S::ACC, S::EMG, S::EDA},
      {S::ACC, S::RESP, S::EDA},
      {S::ACC, S::ECG, S::RESP},
      {S::ACC, S::RESP, S::EMG},
      {S::ACC, S::ECG, S::EDA},  // CB20
      {S::ECG, S::RESP, S::EMG},
      {S::ECG, S::EDA, S::TEMP},
      {S::ECG, S::RESP, S::EDA},
      {S::ECG, S::EMG, S::EDA},
      {S::RESP, S::EMG, S::EDA},  // CB25
      {S::RESP, S::EDA, S::TEMP},
      {S::EMG, S::EDA, S::TEMP},
      {S::ACC, S::RESP},
      {S::ACC, S::EMG},
      {S::ACC, S::ECG},  // CB30
      {S::ACC, S::EDA},
      {S::ACC, S::TEMP},
      {S::ECG, S::RESP},
      {S::ECG, S::EMG},
      {S::ECG, S::EDA},  // CB35
      {S::ECG, S::TEMP},
      {S::EDA, S::TEMP},
      {S::RESP, S::EDA},
      {S::RESP, S::EMG},
      {S::RESP, S::TEMP},  // CB40
      {S::EMG, S::EDA},
      {S::EMG, S::TEMP},
  };
  std::vector<BranchSpec> out;
  for (std::size_t i = 0; i < sets.size(); ++i) out.push_back(make("CB" + std::to_string(i + 1), Device::Chest, sets[i]));
  return out;
}

}  // namespace

std::size_t BranchSpec::feature_count() const {
  std::size_t n = 0;
  for (auto s : sensors) n += features::feature_count(s);
  return n;
}

const std::vector<BranchSpec>& catalog(Device device) {
  static const std::vector<BranchSpec> wrist = build_wrist();
  static const std::vector<BranchSpec> chest = build_chest();
  return device == Device::Wrist ? wrist : chest;
}

const BranchSpec& find_branch(std::string_view id) {
  for (auto d : {Device::Wrist, Device::Chest}) {
    for (const auto& b : catalog(d)) {
      if (b.id == id) return b;
    }
  }
  throw ConfigError("unknown branch id '" + std::string(id) + "'");
}

std::size_t catalog_index(std::string_view id) {
  const auto& b = find_branch(id);
  const auto& all = catalog(b.device);
  return static_cast<std::size_t>(&b - all.data());
}

std::vector<Sensor> device_sensors(Device device) {
  if (device == Device::Wrist) return {S::ACC, S::BVP, S::EDA, S::TEMP};
  return {S::ACC, S::ECG, S::RESP, S::EMG, S::EDA, S::TEMP};
}

Sensor default_context_sensor(Device device) { return device == Device::Wrist ? S::ACC : S::EMG; }

features::FeatureVector early_fuse(const std::map<Sensor, std::vector<double>>& parts, const BranchSpec& branch) {
  features::FeatureVector out;
  for (auto s : branch.sensors) {
    const auto it = parts.find(s);
    if (it == parts.end()) {
      throw MissingModalityError("branch " + branch.id + " needs " + std::string(to_string(s)) + " features");
    }
    out.sensors.push_back(s);
    out.values.insert(out.values.end(), it->second.begin(), it->second.end());
  }
  return out;
}

std::vector<BranchSpec> shortlist_branches(std::span<const BranchSpec> candidates, std::span<const double> total_ce,
                                           std::size_t count) {
  if (candidates.size() != total_ce.size()) throw DataError("shortlist: one loss total per candidate required");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rank = [&](std::size_t i) { return catalog_index(candidates[i].id); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (total_ce[a] != total_ce[b]) return total_ce[a] < total_ce[b];
    if (rank(a) != rank(b)) return rank(a) < rank(b);
    return candidates[a].family < candidates[b].family;
  });
  std::vector<BranchSpec> out;
  for (std::size_t i = 0; i < order.size() && out.size() < count; ++i) out.push_back(candidates[order[i]]);
  return out;
}

std::vector<int> gating_labels(const learners::Matrix& ce, std::span<const BranchSpec> branches) {
  if (ce.cols != branches.size()) throw DataError("gating labels: one loss column per branch required");
  std::vector<int> labels(ce.rows, 0);
  auto better = [&](std::size_t a, std::size_t b, double la, double lb) {
    if (la != lb) return la < lb;
    if (branches[a].sensors.size() != branches[b].sensors.size()) {
      return branches[a].sensors.size() < branches[b].sensors.size();
    }
    return catalog_index(branches[a].id) < catalog_index(branches[b].id);
  };
  for (std::size_t i = 0; i < ce.rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < ce.cols; ++j) {
      if (better(j, best, ce(i, j), ce(i, best))) best = j;
    }
    labels[i] = static_cast<int>(best);
  }
  return labels;
}

}  // namespace selfcare::fusion
