#include "selfcare/eval.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <optional>

#include "selfcare/errors.hpp"
#include "selfcare/parallel.hpp"
#include "selfcare/rng.hpp"

namespace selfcare::eval {

using fusion::FeatureTable;
using learners::Matrix;

// ---- feature tables ----

FeatureTable extract_record(const SubjectRecord& raw, std::span<const Sensor> sensors, const ExtractionOptions& options) {
  options.segmentation.validate();
  const auto record = dsp::preprocess(raw);
  const auto segments = dsp::segment(record, options.segmentation);
  FeatureTable out;
  out.device = raw.device;
  for (auto s : sensors) out.blocks[s] = Matrix(0, features::feature_count(s));
  for (const auto& seg : segments) {
    for (auto s : sensors) out.blocks[s].append_row(features::extract(seg, s, options.features));
    out.subject.push_back(seg.subject_id);
    out.window_index.push_back(seg.window_index);
    out.label_code.push_back(seg.label);
  }
  return out;
}

namespace {

std::vector<std::string> wanted_subjects(std::vector<std::string> all, const std::vector<std::string>& filter) {
  if (filter.empty()) return all;
  for (const auto& id : filter) {
    if (std::find(all.begin(), all.end(), id) == all.end()) throw DataError("unknown subject " + id);
  }
  return filter;
}

FeatureTable concatenate(std::vector<FeatureTable>& parts, Device device) {
  FeatureTable out;
  out.device = device;
  for (auto& p : parts) out.append(p);
  return out;
}

}  // namespace

FeatureTable build_feature_table(const dataset::DatasetStore& store, Device device, const ExtractionOptions& options) {
  std::vector<std::string> ids;
  for (const auto& id : store.subject_ids()) {
    if (store.has(id, device)) ids.push_back(id);
  }
  ids = wanted_subjects(std::move(ids), options.subjects);
  const auto sensors = fusion::device_sensors(device);
  std::vector<FeatureTable> parts(ids.size());
  parallel_for(ids.size(), options.jobs, [&](std::size_t i) {
    parts[i] = extract_record(store.load(ids[i], device), sensors, options);
  });
  return concatenate(parts, device);
}

FeatureTable build_feature_table(std::span<const SubjectRecord> records, Device device, const ExtractionOptions& options) {
  std::vector<const SubjectRecord*> chosen;
  std::vector<std::string> ids;
  for (const auto& r : records) {
    if (r.device == device) ids.push_back(r.subject_id);
  }
  ids = wanted_subjects(std::move(ids), options.subjects);
  for (const auto& id : ids) {
    for (const auto& r : records) {
      if (r.device == device && r.subject_id == id) chosen.push_back(&r);
    }
  }
  const auto sensors = fusion::device_sensors(device);
  std::vector<FeatureTable> parts(chosen.size());
  parallel_for(chosen.size(), options.jobs, [&](std::size_t i) { parts[i] = extract_record(*chosen[i], sensors, options); });
  return concatenate(parts, device);
}

// ---- folds and metrics ----

std::vector<Fold> loso_folds(std::span<const std::string> subjects) {
  if (subjects.size() < 2) throw DataError("leave-one-subject-out needs at least two subjects");
  std::vector<Fold> folds;
  for (const auto& test : subjects) {
    Fold f;
    f.test = test;
    for (const auto& s : subjects) {
      if (s != test) f.train.push_back(s);
    }
    if (f.train.size() + 1 != subjects.size()) throw DataError("duplicate subject id " + test);
    folds.push_back(std::move(f));
  }
  return folds;
}

ConfusionMatrix::ConfusionMatrix(int n_classes) : n_(n_classes), counts_(static_cast<std::size_t>(n_classes * n_classes), 0) {
  if (n_classes < 1) throw DataError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int truth, int predicted, std::uint64_t count) {
  if (truth < 0 || truth >= n_ || predicted < 0 || predicted >= n_) throw DataError("confusion matrix index out of range");
  counts_[static_cast<std::size_t>(truth * n_ + predicted)] += count;
}

std::uint64_t ConfusionMatrix::at(int truth, int predicted) const {
  return counts_.at(static_cast<std::size_t>(truth * n_ + predicted));
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (int c = 0; c < n_; ++c) t += at(c, c);
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (n_ == 0) {
    *this = other;
    return *this;
  }
  if (other.n_ != n_) throw DataError("cannot add confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

Metrics metrics(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw DataError("metrics of an empty confusion matrix");
  const int k = cm.n_classes();
  Metrics m;
  m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  for (int c = 0; c < k; ++c) {
    std::uint64_t predicted = 0, actual = 0;
    for (int o = 0; o < k; ++o) {
      predicted += cm.at(o, c);
      actual += cm.at(c, o);
    }
    const double tp = static_cast<double>(cm.at(c, c));
    const double p = predicted ? tp / static_cast<double>(predicted) : 0.0;
    const double r = actual ? tp / static_cast<double>(actual) : 0.0;
    m.precision.push_back(p);
    m.recall.push_back(r);
    m.f1.push_back(p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0);
  }
  m.macro_f1 = std::accumulate(m.f1.begin(), m.f1.end(), 0.0) / static_cast<double>(k);
  return m;
}

void MethodResult::finalise() {
  pooled = ConfusionMatrix();
  double acc = 0.0, f1 = 0.0;
  std::size_t counted = 0;
  for (auto& f : folds) {
    pooled += f.confusion;
    if (f.confusion.total() == 0) continue;
    f.metrics = metrics(f.confusion);
    acc += f.metrics.accuracy;
    f1 += f.metrics.macro_f1;
    ++counted;
  }
  if (pooled.total() > 0) pooled_metrics = metrics(pooled);
  fold_mean_accuracy = counted ? acc / static_cast<double>(counted) : 0.0;
  fold_mean_macro_f1 = counted ? f1 / static_cast<double>(counted) : 0.0;
}

// ---- benchmark ----

namespace {

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  return out;
}

template <typename T>
std::vector<T> select(const std::vector<T>& v, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

struct FoldRows {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;  // window order
};

std::vector<FoldRows> fold_rows(const FeatureTable& table, const std::vector<Fold>& folds) {
  std::vector<FoldRows> out;
  for (const auto& f : folds) {
    FoldRows fr;
    for (std::size_t i = 0; i < table.rows(); ++i) (table.subject[i] == f.test ? fr.test : fr.train).push_back(i);
    std::stable_sort(fr.test.begin(), fr.test.end(),
                     [&](std::size_t a, std::size_t b) { return table.window_index[a] < table.window_index[b]; });
    out.push_back(std::move(fr));
  }
  return out;
}

}  // namespace

const BenchmarkCell* BenchmarkResult::find(std::string_view branch, learners::Family family) const {
  for (const auto& c : cells) {
    if (c.branch.id == branch && c.family == family) return &c;
  }
  return nullptr;
}

std::vector<fusion::BranchSpec> BenchmarkResult::shortlist(learners::Family family, std::size_t count) const {
  std::vector<fusion::BranchSpec> candidates;
  std::vector<double> losses;
  for (const auto& c : cells) {
    if (c.family != family) continue;
    candidates.push_back(c.branch);
    candidates.back().family = family;
    losses.push_back(c.training_ce);
  }
  return fusion::shortlist_branches(candidates, losses, count);
}

BenchmarkResult run_benchmark(const FeatureTable& table, std::span<const fusion::BranchSpec> branches,
                              std::span<const learners::Family> families, Task task, const RunOptions& options) {
  const auto subjects = table.subject_ids();
  const auto folds = loso_folds(subjects);
  const auto rows = fold_rows(table, folds);
  const auto y = table.classes(task);
  const int k = class_count(task);

  std::vector<Matrix> fused;
  for (const auto& b : branches) fused.push_back(table.fused(b));

  BenchmarkResult result;
  result.device = table.device;
  result.task = task;
  for (const auto& b : branches) {
    for (auto fam : families) {
      BenchmarkCell cell;
      cell.branch = b;
      cell.branch.family = fam;
      cell.family = fam;
      cell.result.name = b.id + "/" + std::string(learners::to_string(fam));
      cell.result.folds.resize(folds.size());
      result.cells.push_back(std::move(cell));
    }
  }
  std::vector<double> ce(result.cells.size() * folds.size(), 0.0);

  const std::size_t nf = families.size();
  parallel_for(result.cells.size() * folds.size(), options.jobs, [&](std::size_t job) {
    const std::size_t c = job / folds.size(), f = job % folds.size();
    const std::size_t b = c / nf;
    auto& cell = result.cells[c];
    auto lc = options.learner;
    lc.family = cell.family;
    lc.jobs = 1;
    lc.seed = derive_seed(options.seed, {fusion::catalog_index(cell.branch.id), static_cast<std::uint64_t>(cell.family), f});
    const auto x_train = select_rows(fused[b], rows[f].train);
    const auto y_train = select(y, rows[f].train);
    const auto model = learners::fit(lc, x_train, y_train, k);
    const auto losses = learners::training_cross_entropy(*model, x_train, y_train);
    ce[job] = std::accumulate(losses.begin(), losses.end(), 0.0);
    const auto predicted = model->predict(select_rows(fused[b], rows[f].test));
    FoldResult fr{folds[f].test, ConfusionMatrix(k), {}};
    for (std::size_t i = 0; i < predicted.size(); ++i) fr.confusion.add(y[rows[f].test[i]], predicted[i]);
    cell.result.folds[f] = std::move(fr);
  });

  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    auto& cell = result.cells[c];
    for (std::size_t f = 0; f < folds.size(); ++f) cell.training_ce += ce[c * folds.size() + f];
    cell.result.finalise();
  }
  return result;
}

// ---- SELF-CARE ----

const MethodResult& SelfCareResult::find(std::string_view name) const {
  for (const auto& m : methods) {
    if (m.name == name) return m;
  }
  throw Error("no method named " + std::string(name) + " in this result");
}

namespace {

constexpr fusion::LateFusion kBackends[] = {fusion::LateFusion::Kalman, fusion::LateFusion::Soft, fusion::LateFusion::Hard};

std::string method_name(std::string_view group, fusion::LateFusion b) { return std::string(group) + "/" + std::string(to_string(b)); }

struct FoldOutput {
  std::vector<ConfusionMatrix> confusions;  // one per method
  std::vector<SegmentPrediction> predictions;
};

}  // namespace

SelfCareResult run_selfcare(const FeatureTable& table, const fusion::FusionConfig& config, const SelfCareOptions& options) {
  config.validate();
  if (table.device != config.device) throw ConfigError("feature table and fusion config disagree on the device");
  const auto subjects = table.subject_ids();
  const auto folds = loso_folds(subjects);
  const auto rows = fold_rows(table, folds);
  const auto y = table.classes(config.task);
  const int k = config.n_classes();
  const auto branches = config.branches();

  SelfCareResult result;
  result.config = config;
  result.headline = method_name("selfcare", config.fusion);
  std::vector<std::string> names;
  if (options.comparisons) {
    for (auto b : kBackends) names.push_back(method_name("selfcare", b));
    for (auto b : kBackends) names.push_back(method_name("all", b));
    for (const auto& br : branches) names.push_back("branch/" + br.id);
    names.push_back("majority");
  } else {
    names.push_back(result.headline);
  }
  auto index_of = [&](const std::string& n) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  const std::size_t headline_index = index_of(result.headline);

  std::vector<FoldOutput> outputs(folds.size());
  std::mutex observer_mutex;
  parallel_for(folds.size(), options.jobs, [&](std::size_t f) {
    const auto train = table.subset(rows[f].train);
    if (options.observer) {
      std::lock_guard lock(observer_mutex);
      options.observer(folds[f], train);
    }
    fusion::TrainOptions to;
    to.seed = derive_seed(options.seed, {f});
    to.jobs = 1;
    to.learner = options.learner;
    const fusion::SelfCareClassifier clf(fusion::train_bundle(train, config, to));

    const auto train_y = train.classes(config.task);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int c : train_y) ++counts[static_cast<std::size_t>(c)];
    const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());

    auto& out = outputs[f];
    out.confusions.assign(names.size(), ConfusionMatrix(k));
    // Each Kalman-backed method follows the subject's stream with its own filter.
    auto selfcare_filter = clf.make_filter();
    auto all_filter = clf.make_filter();
    std::vector<std::size_t> everything(branches.size());
    std::iota(everything.begin(), everything.end(), std::size_t{0});

    for (auto r : rows[f].test) {
      fusion::TableFeatures src(table, r);
      const int truth = y[r];
      const auto gate = fusion::gate_select(clf.bundle().gate.probabilities(src.sensor(config.context)), config.delta,
                                            config.context);
      for (auto backend : kBackends) {
        if (!options.comparisons && backend != config.fusion) continue;
        auto p = clf.fuse(src, gate.selected, backend, backend == fusion::LateFusion::Kalman ? &selfcare_filter : nullptr);
        const auto m = index_of(method_name("selfcare", backend));
        out.confusions[m].add(truth, p.label);
        if (m == headline_index) {
          out.predictions.push_back({table.subject[r], table.window_index[r], truth, p.label, p.selected_ids, p.scores});
        }
      }
      if (!options.comparisons) continue;
      for (auto backend : kBackends) {
        const auto p = clf.fuse(src, everything, backend, backend == fusion::LateFusion::Kalman ? &all_filter : nullptr);
        out.confusions[index_of(method_name("all", backend))].add(truth, p.label);
      }
      for (std::size_t j = 0; j < branches.size(); ++j) {
        const std::size_t one[] = {j};
        const auto p = clf.fuse(src, one, fusion::LateFusion::Soft, nullptr);
        out.confusions[index_of("branch/" + branches[j].id)].add(truth, p.label);
      }
      out.confusions[index_of("majority")].add(truth, majority);
    }
  });

  for (std::size_t m = 0; m < names.size(); ++m) {
    MethodResult mr;
    mr.name = names[m];
    for (std::size_t f = 0; f < folds.size(); ++f) mr.folds.push_back({folds[f].test, outputs[f].confusions[m], {}});
    mr.finalise();
    result.methods.push_back(std::move(mr));
  }
  for (auto& o : outputs) {
    result.predictions.insert(result.predictions.end(), std::make_move_iterator(o.predictions.begin()),
                              std::make_move_iterator(o.predictions.end()));
  }
  return result;
}

}  // namespace selfcare::eval
