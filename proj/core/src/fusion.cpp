#include <algorithm>
#include <cmath>

#include "selfcare/errors.hpp"
#include "selfcare/fusion.hpp"

namespace selfcare::fusion {

int argmax(std::span<const double> v) {
  if (v.empty()) throw DataError("argmax of an empty vector");
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double GateDecision::best() const { return probabilities.empty() ? 0.0 : *std::max_element(probabilities.begin(), probabilities.end()); }

GateDecision gate_select(std::span<const double> probabilities, double delta, Sensor context) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
  GateDecision d;
  d.probabilities.assign(probabilities.begin(), probabilities.end());
  d.delta = delta;
  d.context = context;
  const auto top = static_cast<std::size_t>(argmax(probabilities));
  // Absorbs rounding in max - delta so that delta = 1 admits p = 0.
  const double cut = probabilities[top] - delta - 1e-12;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (i == top || probabilities[i] >= cut) d.selected.push_back(i);
  }
  return d;
}

std::size_t GateModel::n_branches() const { return tree_ ? static_cast<std::size_t>(tree_->n_classes()) : 0; }

std::vector<double> GateModel::probabilities(std::span<const double> context_features) const {
  if (!tree_) throw ConfigError("gate model is not trained");
  return tree_->predict_proba_row(context_features);
}

GateModel train_gate(const learners::Matrix& context_features, std::span<const int> labels, std::size_t n_branches,
                     Sensor context, std::uint64_t seed) {
  if (n_branches == 0) throw ConfigError("gate needs at least one branch");
  if (context_features.rows != labels.size() || context_features.rows == 0) {
    throw DataError("gate: one label per context row required");
  }
  for (double v : context_features.data) {
    if (!std::isfinite(v)) throw DataError("gate: non-finite context feature");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= n_branches) throw DataError("gate: label outside the shortlist");
  }
  learners::TreeParams params;
  params.n_classes = static_cast<int>(n_branches);
  params.min_samples_split = kGateMinSamplesSplit;
  params.seed = seed;
  learners::DecisionTree tree;
  tree.fit(context_features, labels, {}, params);
  learners::LearnerConfig cfg;
  cfg.family = learners::Family::DT;
  cfg.min_samples_split = kGateMinSamplesSplit;
  cfg.seed = seed;
  return GateModel(learners::wrap_tree(cfg, context_features.cols, std::move(tree)), context);
}

namespace {

void check_votes(std::span<const std::vector<double>> probabilities) {
  if (probabilities.empty()) throw DataError("vote over zero branches");
  for (const auto& p : probabilities) {
    if (p.size() != probabilities.front().size() || p.empty()) throw DataError("vote: branch outputs differ in arity");
  }
}

}  // namespace

std::vector<double> mean_probabilities(std::span<const std::vector<double>> probabilities) {
  check_votes(probabilities);
  std::vector<double> mean(probabilities.front().size(), 0.0);
  for (const auto& p : probabilities) {
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
  }
  for (auto& v : mean) v /= static_cast<double>(probabilities.size());
  return mean;
}

// Summed probabilities closer than this are a tie; otherwise rounding in the
// sums would decide between mathematically equal classes.
constexpr double kTieTolerance = 1e-12;

int hard_vote(std::span<const std::vector<double>> probabilities) {
  check_votes(probabilities);
  const std::size_t k = probabilities.front().size();
  std::vector<int> votes(k, 0);
  std::vector<double> mass(k, 0.0);
  for (const auto& p : probabilities) {
    ++votes[static_cast<std::size_t>(argmax(p))];
    for (std::size_t c = 0; c < k; ++c) mass[c] += p[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best] + kTieTolerance)) best = c;
  }
  return static_cast<int>(best);
}

int soft_vote(std::span<const std::vector<double>> probabilities) {
  const auto mean = mean_probabilities(probabilities);
  std::size_t best = 0;
  for (std::size_t c = 1; c < mean.size(); ++c) {
    if (mean[c] > mean[best] + kTieTolerance) best = c;
  }
  return static_cast<int>(best);
}

}  // namespace selfcare::fusion
