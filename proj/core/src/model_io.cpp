#include <cstring>
#include <fstream>

#include "binary_io.hpp"
#include "models.hpp"
#include "selfcare/errors.hpp"
#include "selfcare/learners.hpp"

namespace selfcare::learners {

using namespace selfcare::detail;

namespace {

constexpr char kMagic[4] = {'S', 'C', 'M', 'L'};

void check_tree(const DecisionTree& t, int k, std::size_t d) {
  if (t.n_classes() != k) throw FormatError("model container: tree class count mismatch");
  for (const auto& n : t.nodes()) {
    if (n.feature >= 0 && static_cast<std::size_t>(n.feature) >= d) {
      throw FormatError("model container: tree splits on a feature beyond the declared arity");
    }
  }
}

}  // namespace

namespace detail {

void TreeModel::write_payload(std::ostream& out) const { tree_.write(out); }

std::shared_ptr<TreeModel> TreeModel::read_payload(std::istream& in, const LearnerConfig& cfg, int k, std::size_t d) {
  auto tree = DecisionTree::read(in);
  check_tree(tree, k, d);
  return std::make_shared<TreeModel>(cfg, k, d, std::move(tree));
}

void EnsembleModel::write_payload(std::ostream& out) const {
  put_u32(out, static_cast<std::uint32_t>(trees_.size()));
  for (const auto& t : trees_) t.write(out);
}

std::shared_ptr<EnsembleModel> EnsembleModel::read_payload(std::istream& in, const LearnerConfig& cfg, int k,
                                                           std::size_t d) {
  const auto count = get_count(in, 1u << 20, "tree");
  if (count == 0) throw FormatError("model container: ensemble without trees");
  std::vector<DecisionTree> trees;
  trees.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    trees.push_back(DecisionTree::read(in));
    check_tree(trees.back(), k, d);
  }
  return std::make_shared<EnsembleModel>(cfg, k, d, std::move(trees));
}

void LdaModel::write_payload(std::ostream& out) const {
  for (Eigen::Index c = 0; c < coef_.cols(); ++c) {
    for (Eigen::Index j = 0; j < coef_.rows(); ++j) put_f64(out, coef_(j, c));
  }
  for (Eigen::Index c = 0; c < intercept_.size(); ++c) put_f64(out, intercept_(c));
}

std::shared_ptr<LdaModel> LdaModel::read_payload(std::istream& in, const LearnerConfig& cfg, int k, std::size_t d) {
  Eigen::MatrixXd coef(static_cast<Eigen::Index>(d), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) coef(j, c) = get_f64(in);
  }
  Eigen::VectorXd intercept(k);
  for (Eigen::Index c = 0; c < k; ++c) intercept(c) = get_f64(in);
  return std::make_shared<LdaModel>(cfg, k, d, std::move(coef), std::move(intercept));
}

void KnnModel::write_payload(std::ostream& out) const {
  put_u32(out, static_cast<std::uint32_t>(points_.rows));
  for (double v : mean_) put_f64(out, v);
  for (double v : scale_) put_f64(out, v);
  for (double v : points_.data) put_f64(out, v);
  for (int v : labels_) put_i32(out, v);
}

std::shared_ptr<KnnModel> KnnModel::read_payload(std::istream& in, const LearnerConfig& cfg, int k, std::size_t d) {
  const auto n = get_count(in, 1u << 24, "neighbour");
  if (n == 0) throw FormatError("model container: KNN without stored points");
  std::vector<double> mean(d), scale(d);
  for (auto& v : mean) v = get_f64(in);
  for (auto& v : scale) v = get_f64(in);
  Matrix points(n, d);
  for (auto& v : points.data) v = get_f64(in);
  std::vector<int> labels(n);
  for (auto& v : labels) {
    v = get_i32(in);
    if (v < 0 || v >= k) throw FormatError("model container: KNN label out of range");
  }
  return std::make_shared<KnnModel>(cfg, k, d, std::move(mean), std::move(scale), std::move(points), std::move(labels));
}

}  // namespace detail

void save_model(const TrainedModel& model, std::ostream& out) {
  const auto& cfg = model.config();
  out.write(kMagic, 4);
  put_u16(out, kModelFormatVersion);
  put_u8(out, static_cast<std::uint8_t>(cfg.family));
  put_i32(out, cfg.n_estimators);
  put_i32(out, cfg.min_samples_split);
  put_i32(out, cfg.max_depth);
  put_i32(out, cfg.k);
  put_u64(out, cfg.seed);
  put_u32(out, static_cast<std::uint32_t>(model.n_classes()));
  put_u32(out, static_cast<std::uint32_t>(model.n_features()));
  model.write_payload(out);
  if (!out) throw Error("failed to write model container");
}

ModelPtr load_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a model container (bad magic)");
  const auto version = get_u16(in);
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model container version " + std::to_string(version));
  }
  const auto tag = get_u8(in);
  if (tag > static_cast<std::uint8_t>(Family::KNN)) throw FormatError("unknown model family tag");
  LearnerConfig cfg;
  cfg.family = static_cast<Family>(tag);
  cfg.n_estimators = get_i32(in);
  cfg.min_samples_split = get_i32(in);
  cfg.max_depth = get_i32(in);
  cfg.k = get_i32(in);
  cfg.seed = get_u64(in);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model container: ") + e.what());
  }
  const auto k = static_cast<int>(get_count(in, 1024, "class"));
  const auto d = static_cast<std::size_t>(get_count(in, 1u << 20, "feature"));
  const int min_k = cfg.family == Family::DT ? 1 : 2;  // constant gates are single-class trees
  if (k < min_k || d == 0) throw FormatError("model container: invalid class count or arity");
  switch (cfg.family) {
    case Family::DT: return detail::TreeModel::read_payload(in, cfg, k, d);
    case Family::RF:
    case Family::AB: return detail::EnsembleModel::read_payload(in, cfg, k, d);
    case Family::LDA: return detail::LdaModel::read_payload(in, cfg, k, d);
    case Family::KNN: return detail::KnnModel::read_payload(in, cfg, k, d);
  }
  throw FormatError("unknown model family tag");
}

void save_model_file(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  save_model(model, out);
}

ModelPtr load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path);
  return load_model(in);
}

}  // namespace selfcare::learners
