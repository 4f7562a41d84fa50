#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfcare/features.hpp"
#include "selfcare/fusion.hpp"
#include "selfcare/kalman.hpp"
#include "selfcare/learners.hpp"
#include "selfcare/types.hpp"

namespace selfcare::fusion {

enum class LateFusion : std::uint8_t { Hard, Soft, Kalman };

// Which per-sample loss decides the gate's training labels: the branch
// models' loss on their own training rows, or on rows of a training subject
// held out from an inner leave-one-subject-out refit.
enum class GatingLoss : std::uint8_t { InSample, HeldOut };

std::string_view to_string(LateFusion f);
std::string_view to_string(GatingLoss g);
std::optional<LateFusion> parse_late_fusion(std::string_view name);

// Everything that distinguishes one (device, task) deployment. Read from
// `key = value` text files; see config/*.cfg for the shipped defaults.
struct FusionConfig {
  Device device = Device::Wrist;
  Task task = Task::ThreeClass;
  double delta = 0.0;
  learners::Family family = learners::Family::RF;
  std::vector<std::string> shortlist;  // branch ids
  Sensor context = Sensor::ACC;
  LateFusion fusion = LateFusion::Kalman;
  GatingLoss gating_loss = GatingLoss::InSample;
  KalmanConfig kalman;

  int n_classes() const { return class_count(task); }
  // Shortlisted branches with the configured family, in shortlist order.
  std::vector<BranchSpec> branches() const;
  void validate() const;  // throws ConfigError

  // Unknown keys, duplicate keys and malformed values throw ConfigError.
  static FusionConfig parse(std::istream& in, const std::string& origin = "<stream>");
  static FusionConfig load(const std::filesystem::path& file);
  void write(std::ostream& out) const;
  void save(const std::filesystem::path& file) const;
};

// Directory holding the shipped configs: $SELFCARE_CONFIG_DIR, else the
// source tree (for in-tree builds), else the install location.
std::filesystem::path config_directory();
FusionConfig default_config(Device device, Task task);

// One row per segment, with each sensor's features in its own block.
struct FeatureTable {
  Device device = Device::Wrist;
  std::vector<std::string> subject;
  std::vector<std::size_t> window_index;
  std::vector<std::int32_t> label_code;
  std::map<Sensor, learners::Matrix> blocks;

  std::size_t rows() const { return subject.size(); }
  bool has(Sensor s) const { return blocks.contains(s); }
  // Throws MissingModalityError.
  const learners::Matrix& block(Sensor s) const;
  std::vector<std::string> subject_ids() const;  // first-appearance order
  std::vector<std::size_t> rows_of(const std::string& subject_id) const;
  // Class indices for the task; every row must carry a protocol label.
  std::vector<int> classes(Task task) const;
  FeatureTable subset(std::span<const std::size_t> rows) const;
  learners::Matrix fused(const BranchSpec& branch) const;
  void append(const FeatureTable& other);
};

// Source of per-sensor features for one segment. Implementations memoise,
// so each sensor is extracted at most once per segment.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual const std::vector<double>& sensor(Sensor s) = 0;
};

using Extractor = std::function<std::vector<double>(const WindowedSegment&, Sensor)>;

// Extracts from a windowed segment on demand.
class SegmentFeatures final : public FeatureSource {
 public:
  explicit SegmentFeatures(const WindowedSegment& segment, Extractor extractor = {});
  const std::vector<double>& sensor(Sensor s) override;
  // Number of extractor invocations per sensor so far.
  const std::map<Sensor, int>& calls() const { return calls_; }

 private:
  const WindowedSegment& segment_;
  Extractor extractor_;
  std::map<Sensor, std::vector<double>> cache_;
  std::map<Sensor, int> calls_;
};

// Reads one row of a precomputed table.
class TableFeatures final : public FeatureSource {
 public:
  TableFeatures(const FeatureTable& table, std::size_t row) : table_(table), row_(row) {}
  const std::vector<double>& sensor(Sensor s) override;

 private:
  const FeatureTable& table_;
  std::size_t row_;
  std::map<Sensor, std::vector<double>> cache_;
};

// Trained gate and branch models for one (device, task).
struct Bundle {
  FusionConfig config;
  std::vector<BranchSpec> branches;
  std::vector<learners::ModelPtr> models;  // parallel to branches
  GateModel gate;

  void save(const std::filesystem::path& dir) const;
  static Bundle load(const std::filesystem::path& dir);  // throws FormatError
};

struct TrainOptions {
  std::uint64_t seed = 0;
  int jobs = 1;
  learners::LearnerConfig learner;  // family overridden per branch
};

// What training produced besides the bundle.
struct TrainDiagnostics {
  std::vector<int> gating_labels;
  learners::Matrix training_ce;  // rows x branches
};

Bundle train_bundle(const FeatureTable& train, const FusionConfig& config, const TrainOptions& options,
                    TrainDiagnostics* diagnostics = nullptr);

struct Prediction {
  int label = 0;
  std::vector<double> scores;  // vote shares, mean probabilities or normalised Kalman state
  GateDecision gate;
  std::vector<std::string> selected_ids;
  std::vector<std::vector<double>> branch_probabilities;  // selected branches only
  std::vector<double> kalman_state;                       // raw, Kalman backend only
};

class SelfCareClassifier {
 public:
  explicit SelfCareClassifier(Bundle bundle);

  const Bundle& bundle() const { return bundle_; }
  const FusionConfig& config() const { return bundle_.config; }

  // Fresh filter for a new subject stream.
  KalmanFusion make_filter() const { return KalmanFusion(bundle_.config.kalman); }

  // Gate on context features, then extract only the selected branches'
  // sensors. `stream` carries Kalman state across consecutive segments of
  // one subject; a temporary filter is used when it is null.
  Prediction classify(FeatureSource& features, KalmanFusion* stream = nullptr) const;
  Prediction classify(FeatureSource& features, LateFusion backend, KalmanFusion* stream) const;

  // Fuses an explicit branch selection (positions into the bundle).
  Prediction fuse(FeatureSource& features, std::span<const std::size_t> selected, LateFusion backend,
                  KalmanFusion* stream) const;

 private:
  Bundle bundle_;
};

}  // namespace selfcare::fusion
