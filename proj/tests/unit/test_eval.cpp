#include <algorithm>
#include <mutex>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "selfcare/errors.hpp"
#include "selfcare/eval.hpp"
#include "selfcare/report.hpp"

using namespace selfcare;
using namespace selfcare::eval;

namespace {

fusion::FeatureTable small_table(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  fusion::FeatureTable t;
  t.device = Device::Wrist;
  for (auto s : fusion::device_sensors(Device::Wrist)) t.blocks[s] = learners::Matrix(0, features::feature_count(s));
  for (const char* subject : {"S2", "S3", "S4", "S5"}) {
    for (std::size_t w = 0; w < 24; ++w) {
      const int cls = static_cast<int>((w / 4) % 3);
      t.subject.push_back(subject);
      t.window_index.push_back(w);
      t.label_code.push_back(kBaselineCode + cls);
      for (auto& [s, m] : t.blocks) {
        std::vector<double> row(m.cols);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = n(rng) + (j % 2 == 0 ? cls : 0.0);
        m.append_row(row);
      }
    }
  }
  return t;
}

SelfCareOptions quick_options() {
  SelfCareOptions o;
  o.seed = 7;
  o.learner.n_estimators = 6;
  return o;
}

}  // namespace

TEST(Metrics, MatchRecountOverRandomPredictions) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + trial % 2;
    const std::size_t n = 1 + rng() % 60;
    std::vector<int> truth(n), pred(n);
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng() % static_cast<unsigned>(k));
      pred[i] = static_cast<int>(rng() % static_cast<unsigned>(k));
      cm.add(truth[i], pred[i]);
    }
    const auto m = metrics(cm);
    const auto o = oracle::recount(truth, pred, k);
    ASSERT_NEAR(m.accuracy, o.accuracy, 1e-12);
    ASSERT_NEAR(m.macro_f1, o.macro_f1, 1e-12);
  }
}

TEST(Metrics, WorkedTwoByTwo) {
  ConfusionMatrix cm(2);
  cm.add(0, 0, 50);
  cm.add(0, 1, 10);
  cm.add(1, 0, 5);
  cm.add(1, 1, 35);
  const auto m = metrics(cm);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.85);
  EXPECT_NEAR(m.precision[0], 50.0 / 55.0, 1e-12);
  EXPECT_NEAR(m.recall[1], 35.0 / 40.0, 1e-12);
  const double f0 = 2 * (50.0 / 55) * (50.0 / 60) / (50.0 / 55 + 50.0 / 60);
  const double f1 = 2 * (35.0 / 45) * (35.0 / 40) / (35.0 / 45 + 35.0 / 40);
  EXPECT_NEAR(m.macro_f1, (f0 + f1) / 2, 1e-12);
}

TEST(Metrics, AbsentClassCountsAsZero) {
  ConfusionMatrix cm(3);
  cm.add(0, 0, 4);
  cm.add(1, 1, 4);
  const auto m = metrics(cm);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.f1[2], 0.0);
  EXPECT_NEAR(m.macro_f1, 2.0 / 3.0, 1e-12);
  EXPECT_THROW(metrics(ConfusionMatrix(3)), DataError);
  EXPECT_THROW(cm.add(3, 0), DataError);
}

TEST(Folds, OnePerSubject) {
  const std::vector<std::string> s = {"S2", "S3", "S4"};
  const auto folds = loso_folds(s);
  ASSERT_EQ(folds.size(), 3u);
  EXPECT_EQ(folds[1].test, "S3");
  EXPECT_EQ(folds[1].train, (std::vector<std::string>{"S2", "S4"}));
  EXPECT_THROW(loso_folds(std::vector<std::string>{"S2"}), DataError);
  EXPECT_THROW(loso_folds(std::vector<std::string>{"S2", "S2"}), DataError);
}

TEST(SelfCare, TestSubjectNeverReachesTraining) {
  const auto t = small_table(1);
  auto o = quick_options();
  o.comparisons = false;
  std::mutex m;
  std::set<std::string> seen;
  o.observer = [&](const Fold& fold, const fusion::FeatureTable& train) {
    const auto ids = train.subject_ids();
    EXPECT_EQ(std::count(ids.begin(), ids.end(), fold.test), 0) << fold.test;
    EXPECT_EQ(train.rows(), t.rows() - t.rows_of(fold.test).size());
    std::lock_guard lock(m);
    seen.insert(fold.test);
  };
  const auto r = run_selfcare(t, fusion::default_config(Device::Wrist, Task::ThreeClass), o);
  EXPECT_EQ(seen.size(), 4u);
  EXPECT_EQ(r.headline, "selfcare/kalman");
  EXPECT_EQ(r.predictions.size(), t.rows());
  EXPECT_EQ(r.headline_result().pooled.total(), t.rows());
}

TEST(SelfCare, SeededRunsReproduceTheReport) {
  const auto t = small_table(2);
  const auto cfg = fusion::default_config(Device::Wrist, Task::TwoClass);
  RunInfo info;
  info.command = "eval";
  info.seed = 7;
  info.subjects = t.subject_ids();
  auto o = quick_options();
  const auto a = report_json(run_selfcare(t, cfg, o), info);
  o.jobs = 3;
  const auto b = report_json(run_selfcare(t, cfg, o), info);
  EXPECT_EQ(a, b);
  o.seed = 8;
  EXPECT_NE(a, report_json(run_selfcare(t, cfg, o), info));
}

TEST(SelfCare, ComparisonMethodsArePresent) {
  const auto t = small_table(3);
  const auto r = run_selfcare(t, fusion::default_config(Device::Wrist, Task::ThreeClass), quick_options());
  for (const char* name : {"selfcare/kalman", "selfcare/soft", "selfcare/hard", "all/kalman", "all/soft",
                           "all/hard", "branch/WB1", "branch/WB2", "branch/WB3", "majority"}) {
    EXPECT_NO_THROW(r.find(name)) << name;
  }
  EXPECT_THROW(r.find("nope"), Error);
}

TEST(Benchmark, CellsAndShortlist) {
  const auto t = small_table(4);
  const auto& cat = fusion::catalog(Device::Wrist);
  const std::vector<fusion::BranchSpec> branches(cat.begin(), cat.begin() + 2);
  const learners::Family fams[] = {learners::Family::DT, learners::Family::KNN};
  RunOptions o;
  o.seed = 1;
  const auto r = run_benchmark(t, branches, fams, Task::ThreeClass, o);
  ASSERT_EQ(r.cells.size(), 4u);
  EXPECT_EQ(r.cells[1].branch.id, branches[0].id);
  EXPECT_EQ(r.cells[1].family, learners::Family::KNN);
  ASSERT_NE(r.find(branches[1].id, learners::Family::DT), nullptr);
  for (const auto& c : r.cells) EXPECT_EQ(c.result.pooled.total(), t.rows());
  const auto top = r.shortlist(learners::Family::DT, 1);
  ASSERT_EQ(top.size(), 1u);
  const auto* a = r.find(branches[0].id, learners::Family::DT);
  const auto* b = r.find(branches[1].id, learners::Family::DT);
  EXPECT_EQ(top[0].id, a->training_ce <= b->training_ce ? a->branch.id : b->branch.id);
}

TEST(Report, FnvKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}
