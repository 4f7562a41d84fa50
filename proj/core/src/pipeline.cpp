#include <algorithm>
#include <fstream>

#include "selfcare/errors.hpp"
#include "selfcare/parallel.hpp"
#include "selfcare/pipeline.hpp"
#include "selfcare/rng.hpp"

namespace selfcare::fusion {

// ---- feature table ----

const learners::Matrix& FeatureTable::block(Sensor s) const {
  const auto it = blocks.find(s);
  if (it == blocks.end()) throw MissingModalityError("feature table has no " + std::string(to_string(s)) + " block");
  return it->second;
}

std::vector<std::string> FeatureTable::subject_ids() const {
  std::vector<std::string> out;
  for (const auto& s : subject) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> FeatureTable::rows_of(const std::string& subject_id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < subject.size(); ++i) {
    if (subject[i] == subject_id) out.push_back(i);
  }
  return out;
}

std::vector<int> FeatureTable::classes(Task task) const {
  std::vector<int> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) {
    const auto c = class_index(label_code[i], task);
    if (!c) throw DataError("row " + std::to_string(i) + " carries non-protocol label " + std::to_string(label_code[i]));
    out[i] = *c;
  }
  return out;
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> rows_wanted) const {
  FeatureTable out;
  out.device = device;
  for (const auto& [s, m] : blocks) out.blocks[s] = learners::Matrix(0, m.cols);
  for (auto r : rows_wanted) {
    if (r >= rows()) throw DataError("feature table row out of range");
    out.subject.push_back(subject[r]);
    out.window_index.push_back(window_index[r]);
    out.label_code.push_back(label_code[r]);
    for (const auto& [s, m] : blocks) out.blocks[s].append_row(m.row(r));
  }
  return out;
}

learners::Matrix FeatureTable::fused(const BranchSpec& branch) const {
  std::size_t cols = 0;
  std::vector<const learners::Matrix*> parts;
  for (auto s : branch.sensors) {
    parts.push_back(&block(s));
    cols += parts.back()->cols;
  }
  learners::Matrix out(rows(), cols);
  for (std::size_t r = 0; r < rows(); ++r) {
    double* dst = &out(r, 0);
    for (const auto* m : parts) dst = std::copy(m->row(r).begin(), m->row(r).end(), dst);
  }
  return out;
}

void FeatureTable::append(const FeatureTable& other) {
  if (rows() == 0 && blocks.empty()) {
    *this = other;
    return;
  }
  if (other.device != device) throw DataError("cannot append tables of different devices");
  if (other.blocks.size() != blocks.size()) throw DataError("cannot append tables with different sensors");
  for (const auto& [s, m] : other.blocks) {
    auto it = blocks.find(s);
    if (it == blocks.end() || it->second.cols != m.cols) throw DataError("cannot append tables with different sensors");
    it->second.rows += m.rows;
    it->second.data.insert(it->second.data.end(), m.data.begin(), m.data.end());
  }
  subject.insert(subject.end(), other.subject.begin(), other.subject.end());
  window_index.insert(window_index.end(), other.window_index.begin(), other.window_index.end());
  label_code.insert(label_code.end(), other.label_code.begin(), other.label_code.end());
}

// ---- feature sources ----

SegmentFeatures::SegmentFeatures(const WindowedSegment& segment, Extractor extractor)
    : segment_(segment), extractor_(std::move(extractor)) {
  if (!extractor_) {
    extractor_ = [](const WindowedSegment& seg, Sensor s) { return features::extract(seg, s); };
  }
}

const std::vector<double>& SegmentFeatures::sensor(Sensor s) {
  auto it = cache_.find(s);
  if (it != cache_.end()) return it->second;
  ++calls_[s];
  return cache_.emplace(s, extractor_(segment_, s)).first->second;
}

const std::vector<double>& TableFeatures::sensor(Sensor s) {
  auto it = cache_.find(s);
  if (it != cache_.end()) return it->second;
  const auto row = table_.block(s).row(row_);
  return cache_.emplace(s, std::vector<double>(row.begin(), row.end())).first->second;
}

// ---- bundle ----

void Bundle::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  config.save(dir / "fusion.cfg");
  learners::save_model_file(*gate.model(), (dir / "gate.scml").string());
  for (std::size_t i = 0; i < branches.size(); ++i) {
    learners::save_model_file(*models[i], (dir / (branches[i].id + ".scml")).string());
  }
}

Bundle Bundle::load(const std::filesystem::path& dir) {
  Bundle b;
  try {
    b.config = FusionConfig::load(dir / "fusion.cfg");
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bundle: ") + e.what());
  }
  b.branches = b.config.branches();
  auto gate = learners::load_model_file((dir / "gate.scml").string());
  if (gate->family() != learners::Family::DT || gate->n_classes() != static_cast<int>(b.branches.size()) ||
      gate->n_features() != features::feature_count(b.config.context)) {
    throw FormatError("bundle: gate model does not match the configured shortlist and context");
  }
  b.gate = GateModel(std::move(gate), b.config.context);
  for (const auto& branch : b.branches) {
    auto m = learners::load_model_file((dir / (branch.id + ".scml")).string());
    if (m->n_classes() != b.config.n_classes() || m->n_features() != branch.feature_count()) {
      throw FormatError("bundle: model for " + branch.id + " has the wrong shape");
    }
    b.models.push_back(std::move(m));
  }
  return b;
}

Bundle train_bundle(const FeatureTable& train, const FusionConfig& config, const TrainOptions& options,
                    TrainDiagnostics* diagnostics) {
  config.validate();
  if (train.device != config.device) throw ConfigError("training table and fusion config disagree on the device");
  Bundle b;
  b.config = config;
  b.branches = config.branches();
  const auto y = train.classes(config.task);
  const int k = config.n_classes();
  const std::size_t n = b.branches.size();

  const auto subjects = train.subject_ids();
  const bool held_out = config.gating_loss == GatingLoss::HeldOut && subjects.size() >= 2;
  // Work items: one full fit per branch, plus one inner refit per
  // (branch, training subject) when losses come from held-out rows.
  const std::size_t per_branch = held_out ? subjects.size() + 1 : 1;

  b.models.resize(n);
  learners::Matrix ce(train.rows(), n);
  std::vector<learners::Matrix> fused(n);
  for (std::size_t j = 0; j < n; ++j) fused[j] = train.fused(b.branches[j]);
  parallel_for(n * per_branch, options.jobs, [&](std::size_t job) {
    const std::size_t j = job / per_branch, inner = job % per_branch;
    const auto& branch = b.branches[j];
    auto lc = options.learner;
    lc.family = branch.family;
    lc.seed = derive_seed(options.seed, {catalog_index(branch.id), static_cast<std::uint64_t>(branch.family), inner});
    lc.jobs = 1;
    const auto& x = fused[j];
    if (inner == 0) {
      b.models[j] = learners::fit(lc, x, y, k);
      if (held_out) return;
      const auto losses = learners::training_cross_entropy(*b.models[j], x, y);
      for (std::size_t i = 0; i < losses.size(); ++i) ce(i, j) = losses[i];
      return;
    }
    const auto& held = subjects[inner - 1];
    learners::Matrix xs(0, x.cols), xh(0, x.cols);
    std::vector<int> ys;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < train.rows(); ++i) {
      if (train.subject[i] == held) {
        xh.append_row(x.row(i));
        rows.push_back(i);
      } else {
        xs.append_row(x.row(i));
        ys.push_back(y[i]);
      }
    }
    const auto model = learners::fit(lc, xs, ys, k);
    const auto p = model->predict_proba(xh);
    for (std::size_t r = 0; r < rows.size(); ++r) ce(rows[r], j) = learners::cross_entropy(p.row(r), y[rows[r]]);
  });

  auto labels = gating_labels(ce, b.branches);
  b.gate = train_gate(train.block(config.context), labels, n, config.context, derive_seed(options.seed, {0x6a7e}));
  if (diagnostics) {
    diagnostics->gating_labels = std::move(labels);
    diagnostics->training_ce = std::move(ce);
  }
  return b;
}

// ---- classifier ----

SelfCareClassifier::SelfCareClassifier(Bundle bundle) : bundle_(std::move(bundle)) {
  if (bundle_.branches.empty() || bundle_.models.size() != bundle_.branches.size()) {
    throw ConfigError("bundle needs one model per shortlisted branch");
  }
  if (bundle_.gate.n_branches() != bundle_.branches.size()) throw ConfigError("gate does not match the shortlist");
}

Prediction SelfCareClassifier::classify(FeatureSource& features, KalmanFusion* stream) const {
  return classify(features, bundle_.config.fusion, stream);
}

Prediction SelfCareClassifier::classify(FeatureSource& features, LateFusion backend, KalmanFusion* stream) const {
  const auto& cfg = bundle_.config;
  const auto probs = bundle_.gate.probabilities(features.sensor(cfg.context));
  auto gate = gate_select(probs, cfg.delta, cfg.context);
  auto out = fuse(features, gate.selected, backend, stream);
  out.gate = std::move(gate);
  return out;
}

Prediction SelfCareClassifier::fuse(FeatureSource& features, std::span<const std::size_t> selected, LateFusion backend,
                                    KalmanFusion* stream) const {
  if (selected.empty()) throw DataError("no branch selected");
  // Measurements enter the filter in catalog order, whatever the shortlist order.
  std::vector<std::size_t> order(selected.begin(), selected.end());
  for (auto i : order) {
    if (i >= bundle_.branches.size()) throw DataError("selected branch outside the bundle");
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return catalog_index(bundle_.branches[a].id) < catalog_index(bundle_.branches[b].id);
  });
  Prediction out;
  for (auto i : order) {
    const auto& branch = bundle_.branches[i];
    std::map<Sensor, std::vector<double>> parts;
    for (auto s : branch.sensors) parts[s] = features.sensor(s);
    const auto fused = early_fuse(parts, branch);
    out.selected_ids.push_back(branch.id);
    out.branch_probabilities.push_back(bundle_.models[i]->predict_proba_row(fused.values));
  }

  const auto k = static_cast<std::size_t>(bundle_.config.n_classes());
  switch (backend) {
    case LateFusion::Hard: {
      out.label = hard_vote(out.branch_probabilities);
      out.scores.assign(k, 0.0);
      for (const auto& p : out.branch_probabilities) out.scores[static_cast<std::size_t>(argmax(p))] += 1.0;
      for (auto& v : out.scores) v /= static_cast<double>(out.branch_probabilities.size());
      break;
    }
    case LateFusion::Soft:
      out.scores = mean_probabilities(out.branch_probabilities);
      out.label = argmax(out.scores);
      break;
    case LateFusion::Kalman: {
      std::optional<KalmanFusion> local;
      if (!stream) stream = &local.emplace(bundle_.config.kalman);
      stream->predict();
      for (const auto& z : out.branch_probabilities) stream->update(z);
      out.label = stream->decision();
      out.scores = stream->normalized_state();
      const auto& x = stream->state();
      out.kalman_state.assign(x.data(), x.data() + x.size());
      break;
    }
  }
  return out;
}

}  // namespace selfcare::fusion
