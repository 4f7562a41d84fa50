#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "selfcare/dataset.hpp"
#include "selfcare/dsp.hpp"
#include "selfcare/features.hpp"
#include "selfcare/pipeline.hpp"

namespace selfcare::eval {

// ---- feature tables ----

struct ExtractionOptions {
  dsp::SegmentationSpec segmentation;
  features::FeatureConfig features;
  int jobs = 1;
  std::vector<std::string> subjects;  // empty = all
};

// Preprocesses, segments and extracts every listed sensor of one raw record.
// Rows come out in window order.
fusion::FeatureTable extract_record(const SubjectRecord& raw, std::span<const Sensor> sensors,
                                    const ExtractionOptions& options = {});

// All device sensors for every subject, one subject in memory per worker.
fusion::FeatureTable build_feature_table(const dataset::DatasetStore& store, Device device,
                                         const ExtractionOptions& options = {});
fusion::FeatureTable build_feature_table(std::span<const SubjectRecord> records, Device device,
                                         const ExtractionOptions& options = {});

// ---- folds and metrics ----

struct Fold {
  std::string test;
  std::vector<std::string> train;
};

// One fold per subject, in the given order. Throws DataError below two subjects.
std::vector<Fold> loso_folds(std::span<const std::string> subjects);

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int n_classes);

  int n_classes() const { return n_; }
  void add(int truth, int predicted, std::uint64_t count = 1);
  std::uint64_t at(int truth, int predicted) const;
  std::uint64_t total() const;
  std::uint64_t trace() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int n_ = 0;
  std::vector<std::uint64_t> counts_;  // row = truth, column = prediction
};

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
};

// Undefined precision/recall/F1 terms count as 0; macro F1 always divides
// by the class count. Throws DataError on an empty matrix.
Metrics metrics(const ConfusionMatrix& cm);

struct FoldResult {
  std::string subject;
  ConfusionMatrix confusion;
  Metrics metrics;
};

// One evaluated method: per-fold and pooled confusions.
struct MethodResult {
  std::string name;
  std::vector<FoldResult> folds;
  ConfusionMatrix pooled;
  Metrics pooled_metrics;
  double fold_mean_accuracy = 0.0;
  double fold_mean_macro_f1 = 0.0;

  void finalise();  // pooled sums and aggregate metrics from the folds
};

// ---- benchmark ----

struct RunOptions {
  std::uint64_t seed = 0;
  int jobs = 1;
  learners::LearnerConfig learner;  // family is set per cell
};

struct BenchmarkCell {
  fusion::BranchSpec branch;
  learners::Family family = learners::Family::RF;
  MethodResult result;
  double training_ce = 0.0;  // summed over all training samples of all folds
};

struct BenchmarkResult {
  Device device = Device::Wrist;
  Task task = Task::ThreeClass;
  std::vector<BenchmarkCell> cells;  // branch-major, families in the given order

  const BenchmarkCell* find(std::string_view branch, learners::Family family) const;
  // Lowest total training loss first for one family.
  std::vector<fusion::BranchSpec> shortlist(learners::Family family, std::size_t count) const;
};

// LOSO early-fusion evaluation of every (branch, family) pair.
BenchmarkResult run_benchmark(const fusion::FeatureTable& table, std::span<const fusion::BranchSpec> branches,
                              std::span<const learners::Family> families, Task task, const RunOptions& options);

// ---- SELF-CARE ----

struct SegmentPrediction {
  std::string subject;
  std::size_t window_index = 0;
  int truth = 0;
  int predicted = 0;
  std::vector<std::string> selected;
  std::vector<double> scores;
};

using FoldObserver = std::function<void(const Fold& fold, const fusion::FeatureTable& train)>;

struct SelfCareOptions : RunOptions {
  bool comparisons = true;  // single branches, all-branch fusion, other backends
  FoldObserver observer;    // called once per fold with its training table
};

struct SelfCareResult {
  fusion::FusionConfig config;
  std::string headline;  // name of the configured method
  std::vector<MethodResult> methods;
  std::vector<SegmentPrediction> predictions;  // headline method

  const MethodResult& find(std::string_view name) const;
  const MethodResult& headline_result() const { return find(headline); }
};

// Method names: "selfcare/<backend>", "all/<backend>", "branch/<id>",
// "majority". Folds run in parallel; every model of a fold sees only that
// fold's training subjects.
SelfCareResult run_selfcare(const fusion::FeatureTable& table, const fusion::FusionConfig& config,
                            const SelfCareOptions& options);

}  // namespace selfcare::eval
