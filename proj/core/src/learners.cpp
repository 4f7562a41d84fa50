#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "models.hpp"
#include "selfcare/errors.hpp"
#include "selfcare/learners.hpp"
#include "selfcare/parallel.hpp"
#include "selfcare/rng.hpp"

namespace selfcare::learners {

void Matrix::append_row(std::span<const double> values) {
  if (rows == 0 && cols == 0) cols = values.size();
  if (values.size() != cols) {
    throw DataError("row of " + std::to_string(values.size()) + " values appended to matrix with " +
                    std::to_string(cols) + " columns");
  }
  data.insert(data.end(), values.begin(), values.end());
  ++rows;
}

std::string_view to_string(Family f) {
  switch (f) {
    case Family::DT: return "DT";
    case Family::RF: return "RF";
    case Family::AB: return "AB";
    case Family::LDA: return "LDA";
    case Family::KNN: return "KNN";
  }
  return "?";
}

std::optional<Family> parse_family(std::string_view name) {
  for (auto f : kAllFamilies) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

void LearnerConfig::validate() const {
  if (n_estimators < 1) throw ConfigError("n_estimators must be >= 1");
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
  if (max_depth < 0) throw ConfigError("max_depth must be >= 0");
  if (k < 1) throw ConfigError("k must be >= 1");
}

Matrix TrainedModel::predict_proba(const Matrix& x) const {
  if (x.cols != n_features_ && x.rows > 0) {
    throw DataError("model expects " + std::to_string(n_features_) + " features, got " + std::to_string(x.cols));
  }
  Matrix out(x.rows, static_cast<std::size_t>(n_classes_));
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (double v : x.row(r)) {
      if (!std::isfinite(v)) throw DataError("non-finite feature value at row " + std::to_string(r));
    }
    proba_into(x.row(r), out.row(r));
  }
  return out;
}

std::vector<double> TrainedModel::predict_proba_row(std::span<const double> x) const {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.data.begin());
  return predict_proba(m).data;
}

std::vector<int> TrainedModel::predict(const Matrix& x) const {
  const auto p = predict_proba(x);
  std::vector<int> out(p.rows);
  for (std::size_t r = 0; r < p.rows; ++r) {
    const auto row = p.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double cross_entropy(std::span<const double> probs, int truth) {
  return -std::log(std::max(probs[static_cast<std::size_t>(truth)], 1e-12));
}

std::vector<double> training_cross_entropy(const TrainedModel& model, const Matrix& x, std::span<const int> y) {
  const auto p = model.predict_proba(x);
  std::vector<double> ce(p.rows);
  for (std::size_t r = 0; r < p.rows; ++r) ce[r] = cross_entropy(p.row(r), y[r]);
  return ce;
}

namespace detail {

void TreeModel::proba_into(std::span<const double> x, std::span<double> out) const {
  const auto p = tree_.predict_row(x);
  std::copy(p.begin(), p.end(), out.begin());
}

void EnsembleModel::proba_into(std::span<const double> x, std::span<double> out) const {
  const auto k = static_cast<std::size_t>(n_classes());
  std::fill(out.begin(), out.end(), 0.0);
  if (family() == Family::RF) {
    for (const auto& t : trees_) {
      const auto p = t.predict_row(x);
      for (std::size_t c = 0; c < k; ++c) out[c] += p[c];
    }
    for (auto& v : out) v /= static_cast<double>(trees_.size());
    return;
  }
  // Each boosted tree contributes (K-1)(log p - mean log p); the average is
  // mapped back to probabilities with a softmax over decision/(K-1).
  const double eps = std::numeric_limits<double>::epsilon();
  const double km1 = static_cast<double>(k - 1);
  std::vector<double> logp(k);
  for (const auto& t : trees_) {
    const auto p = t.predict_row(x);
    double mean_log = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      logp[c] = std::log(std::max(p[c], eps));
      mean_log += logp[c];
    }
    mean_log /= static_cast<double>(k);
    for (std::size_t c = 0; c < k; ++c) out[c] += km1 * (logp[c] - mean_log);
  }
  double top = -std::numeric_limits<double>::infinity();
  for (auto& v : out) {
    v = v / static_cast<double>(trees_.size()) / km1;
    top = std::max(top, v);
  }
  double sum = 0.0;
  for (auto& v : out) {
    v = std::exp(v - top);
    sum += v;
  }
  for (auto& v : out) v /= sum;
}

void LdaModel::proba_into(std::span<const double> x, std::span<double> out) const {
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd score = coef_.transpose() * xv + intercept_;
  const double top = score.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index c = 0; c < score.size(); ++c) {
    out[static_cast<std::size_t>(c)] = std::exp(score(c) - top);
    sum += out[static_cast<std::size_t>(c)];
  }
  for (auto& v : out) v /= sum;
}

void KnnModel::proba_into(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = points_.rows;
  const std::size_t d = points_.cols;
  std::vector<double> q(d);
  for (std::size_t j = 0; j < d; ++j) q[j] = (x[j] - mean_[j]) / scale_[j];
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = points_.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += (row[j] - q[j]) * (row[j] - q[j]);
    dist[i] = {s, i};
  }
  const std::size_t k = std::min(n, static_cast<std::size_t>(config().k));
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < k; ++i) out[static_cast<std::size_t>(labels_[dist[i].second])] += 1.0;
  for (auto& v : out) v /= static_cast<double>(k);
}

}  // namespace detail

namespace {

void check_inputs(const LearnerConfig& cfg, const Matrix& x, std::span<const int> y, int n_classes) {
  cfg.validate();
  if (n_classes < 2) throw DataError("at least two classes are required");
  if (x.rows != y.size()) {
    throw DataError("feature matrix has " + std::to_string(x.rows) + " rows but " + std::to_string(y.size()) +
                    " labels were given");
  }
  if (x.rows == 0 || x.cols == 0) throw DataError("empty training matrix");
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    if (!std::isfinite(x.data[i])) {
      throw DataError("non-finite feature value at row " + std::to_string(i / x.cols) + ", column " +
                      std::to_string(i % x.cols));
    }
  }
  std::vector<char> seen(static_cast<std::size_t>(n_classes), 0);
  for (int label : y) {
    if (label < 0 || label >= n_classes) throw DataError("label " + std::to_string(label) + " out of range");
    seen[static_cast<std::size_t>(label)] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 1) < 2) {
    throw DegenerateLabelsError("training labels contain a single class");
  }
}

TreeParams tree_params(const LearnerConfig& cfg, int n_classes) {
  TreeParams p;
  p.n_classes = n_classes;
  p.min_samples_split = cfg.min_samples_split;
  p.max_depth = cfg.max_depth;
  p.seed = cfg.seed;
  return p;
}

ModelPtr fit_forest(const LearnerConfig& cfg, const Matrix& x, std::span<const int> y, int n_classes) {
  const std::size_t n = x.rows;
  std::vector<DecisionTree> trees(static_cast<std::size_t>(cfg.n_estimators));
  parallel_for(trees.size(), cfg.jobs, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, {t, 0}));
    std::vector<double> counts(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) counts[rng() % n] += 1.0;
    TreeParams p = tree_params(cfg, n_classes);
    p.max_features = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols)))));
    p.seed = derive_seed(cfg.seed, {t, 1});
    trees[t].fit(x, y, counts, p);
  });
  return std::make_shared<detail::EnsembleModel>(cfg, n_classes, x.cols, std::move(trees));
}

ModelPtr fit_lda(const LearnerConfig& cfg, const Matrix& x, std::span<const int> y, int n_classes) {
  const auto n = static_cast<Eigen::Index>(x.rows);
  const auto d = static_cast<Eigen::Index>(x.cols);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> xm(x.data.data(), n, d);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(d, n_classes);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    means.col(y[static_cast<std::size_t>(i)]) += xm.row(i).transpose();
    counts(y[static_cast<std::size_t>(i)]) += 1.0;
  }
  for (int c = 0; c < n_classes; ++c) {
    if (counts(c) > 0) means.col(c) /= counts(c);
  }
  Eigen::MatrixXd centred(n, d);
  for (Eigen::Index i = 0; i < n; ++i) centred.row(i) = xm.row(i) - means.col(y[static_cast<std::size_t>(i)]).transpose();
  const int present = static_cast<int>((counts.array() > 0).count());
  const double dof = n > present ? static_cast<double>(n - present) : static_cast<double>(n);
  Eigen::MatrixXd cov = centred.transpose() * centred / dof;
  const double trace = cov.trace();
  const double ridge = 1e-6 * (trace > 0.0 ? trace / static_cast<double>(d) : 1.0);
  cov.diagonal().array() += ridge;

  const Eigen::LDLT<Eigen::MatrixXd> solver(cov);
  Eigen::MatrixXd coef = solver.solve(means);
  Eigen::VectorXd intercept(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    if (counts(c) == 0) {
      coef.col(c).setZero();
      intercept(c) = -std::numeric_limits<double>::infinity();
      continue;
    }
    intercept(c) = -0.5 * means.col(c).dot(coef.col(c)) + std::log(counts(c) / static_cast<double>(n));
  }
  return std::make_shared<detail::LdaModel>(cfg, n_classes, x.cols, std::move(coef), std::move(intercept));
}

ModelPtr fit_knn(const LearnerConfig& cfg, const Matrix& x, std::span<const int> y, int n_classes) {
  const std::size_t n = x.rows, d = x.cols;
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) scale[j] += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
  }
  for (auto& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }
  Matrix points(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) points(i, j) = (x(i, j) - mean[j]) / scale[j];
  }
  return std::make_shared<detail::KnnModel>(cfg, n_classes, d, std::move(mean), std::move(scale), std::move(points),
                                            std::vector<int>(y.begin(), y.end()));
}

}  // namespace

ModelPtr fit_boosted(const LearnerConfig& cfg, const Matrix& x, std::span<const int> y, int n_classes,
                     BoostTrace* trace) {
  check_inputs(cfg, x, y, n_classes);
  LearnerConfig c = cfg;
  c.family = Family::AB;
  const std::size_t n = x.rows;
  const auto k = static_cast<std::size_t>(n_classes);
  const double eps = std::numeric_limits<double>::epsilon();
  const double km1 = static_cast<double>(k - 1);

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (trace) *trace = {{w}, {}, {}};
  std::vector<DecisionTree> trees;
  const TreeParams params = tree_params(c, n_classes);

  for (int round = 0; round < c.n_estimators; ++round) {
    DecisionTree tree;
    tree.fit(x, y, w, params);

    double wrong = 0.0, total = 0.0;
    std::vector<double> exponent(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = tree.predict_row(x.row(i));
      const auto pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
      if (pred != y[i]) wrong += w[i];
      total += w[i];
      // -(K-1)/K * sum_c code_c log p_c with code = 1 for the true class and
      // -1/(K-1) otherwise.
      double s = 0.0;
      for (std::size_t cl = 0; cl < k; ++cl) {
        const double code = static_cast<int>(cl) == y[i] ? 1.0 : -1.0 / km1;
        s += code * std::log(std::max(p[cl], eps));
      }
      exponent[i] = -km1 / static_cast<double>(k) * s;
    }
    const double error = total > 0.0 ? wrong / total : 0.0;
    trees.push_back(std::move(tree));
    if (trace) {
      trace->estimator_errors.push_back(error);
      trace->estimator_weights.push_back(1.0);
    }
    if (error <= 0.0 || round + 1 == c.n_estimators) break;

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] > 0.0 || exponent[i] < 0.0) w[i] *= std::exp(exponent[i]);
      sum += w[i];
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) break;
    for (auto& v : w) v /= sum;
    if (trace) trace->sample_weights.push_back(w);
  }
  return std::make_shared<detail::EnsembleModel>(c, n_classes, x.cols, std::move(trees));
}

ModelPtr wrap_tree(const LearnerConfig& cfg, std::size_t n_features, DecisionTree tree) {
  LearnerConfig c = cfg;
  c.family = Family::DT;
  const int k = tree.n_classes();
  return std::make_shared<detail::TreeModel>(c, k, n_features, std::move(tree));
}

ModelPtr fit(const LearnerConfig& cfg, const Matrix& x, std::span<const int> y, int n_classes) {
  switch (cfg.family) {
    case Family::AB: return fit_boosted(cfg, x, y, n_classes, nullptr);
    default: break;
  }
  check_inputs(cfg, x, y, n_classes);
  switch (cfg.family) {
    case Family::DT: {
      DecisionTree tree;
      tree.fit(x, y, {}, tree_params(cfg, n_classes));
      return std::make_shared<detail::TreeModel>(cfg, n_classes, x.cols, std::move(tree));
    }
    case Family::RF: return fit_forest(cfg, x, y, n_classes);
    case Family::LDA: return fit_lda(cfg, x, y, n_classes);
    case Family::KNN: return fit_knn(cfg, x, y, n_classes);
    case Family::AB: break;
  }
  throw ConfigError("unknown learner family");
}

}  // namespace selfcare::learners
