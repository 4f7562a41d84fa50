#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfcare/features.hpp"
#include "selfcare/learners.hpp"
#include "selfcare/types.hpp"

namespace selfcare::fusion {

// A classifier bound to a fixed sensor subset. Sensors are kept in
// canonical order (the order of the Sensor enum).
struct BranchSpec {
  std::string id;
  Device device = Device::Wrist;
  std::vector<Sensor> sensors;
  learners::Family family = learners::Family::RF;

  std::size_t feature_count() const;
  bool operator==(const BranchSpec&) const = default;
};

// The fixed branch sets per device (WB1..WB5, CB1..CB42), in id order.
// Catalog entries carry the device's default family (RF wrist, AB chest).
const std::vector<BranchSpec>& catalog(Device device);
// Throws ConfigError for unknown ids.
const BranchSpec& find_branch(std::string_view id);
// Position of a branch in its device catalog.
std::size_t catalog_index(std::string_view id);

// Sensors a device carries, and the one the gate reads its context from.
std::vector<Sensor> device_sensors(Device device);
Sensor default_context_sensor(Device device);

// Concatenates per-sensor vectors in the branch's order. Throws
// MissingModalityError naming the first absent sensor.
features::FeatureVector early_fuse(const std::map<Sensor, std::vector<double>>& parts, const BranchSpec& branch);

// Orders candidates by ascending total cross-entropy (ties: catalog order,
// then family) and keeps the first `count`.
std::vector<BranchSpec> shortlist_branches(std::span<const BranchSpec> candidates, std::span<const double> total_ce,
                                           std::size_t count);

// ce is samples x branches. Each label is the column with the smallest
// loss; exact ties go to the branch with fewer sensors, then catalog order.
std::vector<int> gating_labels(const learners::Matrix& ce, std::span<const BranchSpec> branches);

struct GateDecision {
  std::vector<double> probabilities;  // one per shortlisted branch
  double delta = 0.0;
  std::vector<std::size_t> selected;  // ascending branch positions
  Sensor context = Sensor::ACC;

  double best() const;
};

// {b : p_b >= max(p) - delta}. The first argmax is always selected, so the
// set is never empty even when rounding would exclude it.
GateDecision gate_select(std::span<const double> probabilities, double delta, Sensor context = Sensor::ACC);

// Decision tree over the context sensor's features predicting which
// shortlisted branch to trust. A single observed label yields a constant gate.
class GateModel {
 public:
  GateModel() = default;
  GateModel(learners::ModelPtr tree, Sensor context) : tree_(std::move(tree)), context_(context) {}

  Sensor context() const { return context_; }
  std::size_t n_branches() const;
  const learners::ModelPtr& model() const { return tree_; }
  std::vector<double> probabilities(std::span<const double> context_features) const;

 private:
  learners::ModelPtr tree_;
  Sensor context_ = Sensor::ACC;
};

inline constexpr int kGateMinSamplesSplit = 20;

GateModel train_gate(const learners::Matrix& context_features, std::span<const int> labels, std::size_t n_branches,
                     Sensor context, std::uint64_t seed = 0);

// Majority of the branch argmaxes; ties go to the larger summed
// probability, then to the lower class index.
int hard_vote(std::span<const std::vector<double>> probabilities);
// Argmax of the elementwise mean; ties go to the lower class index.
int soft_vote(std::span<const std::vector<double>> probabilities);
std::vector<double> mean_probabilities(std::span<const std::vector<double>> probabilities);

// Lowest index of the maximum.
int argmax(std::span<const double> v);

}  // namespace selfcare::fusion
