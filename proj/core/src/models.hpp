#pragma once

// Concrete model families. Internal: callers only see TrainedModel.

#include <Eigen/Dense>

#include "selfcare/learners.hpp"

namespace selfcare::learners::detail {

class TreeModel final : public TrainedModel {
 public:
  TreeModel(LearnerConfig cfg, int k, std::size_t d, DecisionTree tree)
      : TrainedModel(cfg, k, d), tree_(std::move(tree)) {}
  const DecisionTree& tree() const { return tree_; }
  void write_payload(std::ostream& out) const override;
  static std::shared_ptr<TreeModel> read_payload(std::istream& in, const LearnerConfig& cfg, int k, std::size_t d);

 protected:
  void proba_into(std::span<const double> x, std::span<double> out) const override;

 private:
  DecisionTree tree_;
};

// RF averages tree distributions; AB combines them through the
// log-probability decision function.
class EnsembleModel final : public TrainedModel {
 public:
  EnsembleModel(LearnerConfig cfg, int k, std::size_t d, std::vector<DecisionTree> trees)
      : TrainedModel(cfg, k, d), trees_(std::move(trees)) {}
  const std::vector<DecisionTree>& trees() const { return trees_; }
  void write_payload(std::ostream& out) const override;
  static std::shared_ptr<EnsembleModel> read_payload(std::istream& in, const LearnerConfig& cfg, int k,
                                                     std::size_t d);

 protected:
  void proba_into(std::span<const double> x, std::span<double> out) const override;

 private:
  std::vector<DecisionTree> trees_;
};

class LdaModel final : public TrainedModel {
 public:
  LdaModel(LearnerConfig cfg, int k, std::size_t d, Eigen::MatrixXd coef, Eigen::VectorXd intercept)
      : TrainedModel(cfg, k, d), coef_(std::move(coef)), intercept_(std::move(intercept)) {}
  void write_payload(std::ostream& out) const override;
  static std::shared_ptr<LdaModel> read_payload(std::istream& in, const LearnerConfig& cfg, int k, std::size_t d);

 protected:
  void proba_into(std::span<const double> x, std::span<double> out) const override;

 private:
  Eigen::MatrixXd coef_;       // d x k
  Eigen::VectorXd intercept_;  // k
};

class KnnModel final : public TrainedModel {
 public:
  KnnModel(LearnerConfig cfg, int k, std::size_t d, std::vector<double> mean, std::vector<double> scale,
           Matrix points, std::vector<int> labels)
      : TrainedModel(cfg, k, d),
        mean_(std::move(mean)),
        scale_(std::move(scale)),
        points_(std::move(points)),
        labels_(std::move(labels)) {}
  void write_payload(std::ostream& out) const override;
  static std::shared_ptr<KnnModel> read_payload(std::istream& in, const LearnerConfig& cfg, int k, std::size_t d);

 protected:
  void proba_into(std::span<const double> x, std::span<double> out) const override;

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
  Matrix points_;  // standardised training rows
  std::vector<int> labels_;
};

}  // namespace selfcare::learners::detail
