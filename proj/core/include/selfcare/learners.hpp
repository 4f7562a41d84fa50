#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selfcare::learners {

// Dense row-major matrix. Used both for features and class probabilities.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  void append_row(std::span<const double> values);
};

using FeatureMatrix = Matrix;

enum class Family : std::uint8_t { DT, RF, AB, LDA, KNN };

inline constexpr Family kAllFamilies[] = {Family::DT, Family::RF, Family::AB, Family::LDA, Family::KNN};

std::string_view to_string(Family f);
std::optional<Family> parse_family(std::string_view name);

struct LearnerConfig {
  Family family = Family::RF;
  int n_estimators = 100;
  int min_samples_split = 20;
  int max_depth = 0;  // 0 = unlimited
  int k = 9;
  std::uint64_t seed = 0;
  int jobs = 1;       // ensemble fitting threads; not part of the model

  void validate() const;  // throws ConfigError
};

class TrainedModel {
 public:
  virtual ~TrainedModel() = default;

  Family family() const { return config_.family; }
  const LearnerConfig& config() const { return config_; }
  int n_classes() const { return n_classes_; }
  std::size_t n_features() const { return n_features_; }

  // One row per input row, each on the probability simplex. Throws
  // DataError on arity mismatch or non-finite input.
  Matrix predict_proba(const Matrix& x) const;
  std::vector<double> predict_proba_row(std::span<const double> x) const;
  std::vector<int> predict(const Matrix& x) const;

  virtual void write_payload(std::ostream& out) const = 0;

 protected:
  TrainedModel(LearnerConfig cfg, int n_classes, std::size_t n_features)
      : config_(cfg), n_classes_(n_classes), n_features_(n_features) {}
  virtual void proba_into(std::span<const double> x, std::span<double> out) const = 0;

 private:
  LearnerConfig config_;
  int n_classes_;
  std::size_t n_features_;
};

using ModelPtr = std::shared_ptr<const TrainedModel>;

// y holds class indices in [0, n_classes). Rows with zero weight are
// ignored; `weights` may be empty (all ones). Throws DegenerateLabelsError
// when fewer than two classes occur, DataError on non-finite features or
// mismatched sizes.
ModelPtr fit(const LearnerConfig& cfg, const Matrix& x, std::span<const int> y, int n_classes);

// Per-sample categorical cross-entropy with predictions clamped at 1e-12.
std::vector<double> training_cross_entropy(const TrainedModel& model, const Matrix& x, std::span<const int> y);
double cross_entropy(std::span<const double> probs, int truth);

// ---- decision tree ----

struct TreeParams {
  int n_classes = 2;
  int min_samples_split = 20;
  int max_depth = 0;
  int max_features = 0;  // 0 = all features considered at every node
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
};

// Weighted information-gain tree. Leaves hold normalised class
// distributions. Go left when x[feature] <= threshold.
class DecisionTree {
 public:
  DecisionTree() = default;
  void fit(const Matrix& x, std::span<const int> y, std::span<const double> weights, const TreeParams& params);
  std::span<const double> predict_row(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t internal_nodes() const;
  int n_classes() const { return n_classes_; }

  void write(std::ostream& out) const;
  static DecisionTree read(std::istream& in);

 private:
  std::vector<TreeNode> nodes_;
  std::vector<double> leaf_probs_;  // nodes_.size() x n_classes
  int n_classes_ = 0;
};

// Wraps an already fitted tree (e.g. one trained on a label set that may be
// degenerate) as a DT model so it can be serialised and queried uniformly.
ModelPtr wrap_tree(const LearnerConfig& cfg, std::size_t n_features, DecisionTree tree);

// Sample weights before and after each boosting round, for inspection.
struct BoostTrace {
  std::vector<std::vector<double>> sample_weights;  // round 0 = initial
  std::vector<double> estimator_errors;
  std::vector<double> estimator_weights;
};

// Fits the real-valued multi-class boosting ensemble and reports the
// weight trajectory alongside the model.
ModelPtr fit_boosted(const LearnerConfig& cfg, const Matrix& x, std::span<const int> y, int n_classes,
                     BoostTrace* trace);

// ---- serialisation ----

inline constexpr std::uint16_t kModelFormatVersion = 1;

void save_model(const TrainedModel& model, std::ostream& out);
ModelPtr load_model(std::istream& in);  // throws FormatError
void save_model_file(const TrainedModel& model, const std::string& path);
ModelPtr load_model_file(const std::string& path);

}  // namespace selfcare::learners
