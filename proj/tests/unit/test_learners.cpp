#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "selfcare/errors.hpp"
#include "selfcare/learners.hpp"

using namespace selfcare;
using namespace selfcare::learners;

namespace {

struct Dataset {
  Matrix x;
  std::vector<int> y;
};

Dataset blobs(std::mt19937_64& rng, std::size_t n, std::size_t d, int k, double spread = 1.0) {
  std::normal_distribution<double> g;
  Dataset ds{Matrix(n, d), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    ds.y[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < d; ++j) ds.x(i, j) = spread * g(rng) + (j % 2 ? 1.0 : -1.0) * ds.y[i];
  }
  return ds;
}

LearnerConfig config(Family f, std::uint64_t seed = 1) {
  LearnerConfig c;
  c.family = f;
  c.seed = seed;
  c.n_estimators = 20;
  return c;
}

}  // namespace

TEST(Learners, EveryFamilyOutputsSimplexRows) {
  std::mt19937_64 rng(1);
  for (int k : {2, 3}) {
    const auto train = blobs(rng, 150, 4, k);
    const auto test = blobs(rng, 60, 4, k, 3.0);
    for (auto f : kAllFamilies) {
      const auto m = fit(config(f), train.x, train.y, k);
      EXPECT_EQ(m->n_classes(), k);
      const auto p = m->predict_proba(test.x);
      for (std::size_t r = 0; r < p.rows; ++r) {
        double s = 0.0;
        for (double v : p.row(r)) {
          EXPECT_GE(v, 0.0) << to_string(f);
          s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-9) << to_string(f);
      }
    }
  }
}

TEST(Learners, SeededFitsAreDeterministic) {
  std::mt19937_64 rng(2);
  const auto ds = blobs(rng, 120, 5, 3);
  const auto a = fit(config(Family::RF, 9), ds.x, ds.y, 3), b = fit(config(Family::RF, 9), ds.x, ds.y, 3);
  EXPECT_EQ(a->predict_proba(ds.x).data, b->predict_proba(ds.x).data);
}

TEST(Tree, ThresholdDataNeedsOneSplit) {
  Matrix x(1000, 1);
  std::vector<int> y(1000);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < 1000; ++i) {
    x(i, 0) = u(rng);
    y[i] = x(i, 0) > 0.0;
  }
  DecisionTree t;
  t.fit(x, y, {}, TreeParams{2, 20, 0, 0, 0});
  EXPECT_EQ(t.internal_nodes(), 1u);
  const auto m = fit(config(Family::DT), x, y, 2);
  EXPECT_EQ(m->predict(x), y);
}

TEST(Tree, NineteenSamplesStayALeaf) {
  Matrix x(19, 1);
  std::vector<int> y(19);
  for (std::size_t i = 0; i < 19; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i < 9 ? 0 : 1;
  }
  DecisionTree t;
  t.fit(x, y, {}, TreeParams{2, 20, 0, 0, 0});
  EXPECT_EQ(t.internal_nodes(), 0u);
  EXPECT_NEAR(t.predict_row(x.row(0))[1], 10.0 / 19.0, 1e-12);

  x.append_row(std::vector<double>{19.0});
  y.push_back(1);
  t.fit(x, y, {}, TreeParams{2, 20, 0, 0, 0});
  EXPECT_EQ(t.internal_nodes(), 1u);
}

TEST(Tree, PureLeafIsOneHot) {
  Matrix x(40, 1);
  std::vector<int> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i < 20 ? 0 : 1;
  }
  const auto m = fit(config(Family::DT), x, y, 3);
  const auto p = m->predict_proba_row(std::vector<double>{35.0});
  EXPECT_EQ(p, (std::vector<double>{0.0, 1.0, 0.0}));
}

// Two rounds of real-valued boosting with stumps on ten points, replayed by hand.
TEST(Boosting, TwoRoundsMatchHandOracle) {
  Matrix x(10, 1);
  const std::vector<int> y = {0, 0, 0, 0, 1, 0, 1, 1, 1, 1};
  for (std::size_t i = 0; i < 10; ++i) x(i, 0) = static_cast<double>(i + 1);
  LearnerConfig c;
  c.family = Family::AB;
  c.n_estimators = 2;
  c.min_samples_split = 2;
  c.max_depth = 1;
  BoostTrace trace;
  const auto model = fit_boosted(c, x, y, 2, &trace);

  // Round 1 stump: x <= 4.5 holds four 0s; the right leaf is 1/6 vs 5/6.
  // With two classes each sample's weight is multiplied by
  // exp(-(1/2) * (log p_true - log p_other)).
  const double eps = std::numeric_limits<double>::epsilon();
  std::vector<double> w(10);
  for (std::size_t i = 0; i < 10; ++i) {
    double p_true, p_other;
    if (i < 4) {
      p_true = 1.0, p_other = eps;
    } else {
      p_true = y[i] == 1 ? 5.0 / 6.0 : 1.0 / 6.0;
      p_other = 1.0 - p_true;
    }
    w[i] = 0.1 * std::exp(-0.5 * (std::log(p_true) - std::log(p_other)));
  }
  double sum = 0.0;
  for (double v : w) sum += v;
  for (auto& v : w) v /= sum;

  ASSERT_EQ(trace.sample_weights.size(), 2u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(trace.sample_weights[0][i], 0.1, 1e-15);
    EXPECT_NEAR(trace.sample_weights[1][i], w[i], 1e-9) << i;
  }
  ASSERT_EQ(trace.estimator_errors.size(), 2u);
  EXPECT_NEAR(trace.estimator_errors[0], 0.1, 1e-12);  // only x = 6 misclassified
  EXPECT_EQ(trace.estimator_weights, (std::vector<double>{1.0, 1.0}));

  // Round 2 stump from the reweighted sample, then the averaged log-odds.
  const std::vector<double> xs = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto s1 = oracle::entropy_stump(xs, y, std::vector<double>(10, 0.1), 2);
  const auto s2 = oracle::entropy_stump(xs, y, w, 2);
  EXPECT_DOUBLE_EQ(s1.threshold, 4.5);
  for (std::size_t i = 0; i < 10; ++i) {
    double score = 0.0;  // class-1 decision: mean over trees of (log p1 - log p0) / 2, times 2 back out
    for (const auto* s : {&s1, &s2}) {
      const auto& leaf = xs[i] <= s->threshold ? s->left : s->right;
      score += 0.5 * (std::log(std::max(leaf[1], eps)) - std::log(std::max(leaf[0], eps)));
    }
    score /= 2.0;
    const double p1 = 1.0 / (1.0 + std::exp(-2.0 * score));
    EXPECT_NEAR(model->predict_proba_row(x.row(i))[1], p1, 1e-9) << i;
  }
}

// Thresholds sit at midpoints, so a value a tree never saw can land on
// either side once the axis is warped. Features here take six levels that
// each occur about fifteen times, so every bootstrap sample holds every
// level and the queries (the training rows) route identically.
TEST(Learners, TreeFamiliesIgnoreMonotoneTransforms) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> level(-2, 3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 2;
    Matrix x(90, 3);
    std::vector<int> y(90);
    for (std::size_t i = 0; i < 90; ++i) {
      for (std::size_t j = 0; j < 3; ++j) x(i, j) = level(rng);
      const double score = x(i, 0) - 0.5 * x(i, 1) + g(rng);
      y[i] = k == 2 ? score > 0.5 : (score < -0.5 ? 0 : score < 1.5 ? 1 : 2);
    }
    Matrix cubed = x;
    for (auto& v : cubed.data) v = v * v * v;
    for (auto f : {Family::DT, Family::RF, Family::AB}) {
      auto c = config(f, static_cast<std::uint64_t>(trial));
      c.n_estimators = 10;
      const auto a = fit(c, x, y, k), b = fit(c, cubed, y, k);
      ASSERT_EQ(a->predict(x), b->predict(cubed)) << to_string(f) << " trial " << trial;
    }
  }
}

TEST(Knn, VoteFractionAndMemorisation) {
  Matrix x(0, 1);
  std::vector<int> y;
  for (double v : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) x.append_row(std::vector<double>{v}), y.push_back(1);
  for (double v : {-0.7, -0.8, -0.9}) x.append_row(std::vector<double>{v}), y.push_back(0);
  for (double v : {10.0, 11.0, 12.0}) x.append_row(std::vector<double>{v}), y.push_back(2);
  for (double v : {-10.0, -11.0}) x.append_row(std::vector<double>{v}), y.push_back(0);
  const auto m = fit(config(Family::KNN), x, y, 3);
  const auto p = m->predict_proba_row(std::vector<double>{0.0});
  EXPECT_NEAR(p[1], 6.0 / 9.0, 1e-12);
  EXPECT_NEAR(p[0], 3.0 / 9.0, 1e-12);

  auto c = config(Family::KNN);
  c.k = 1;
  std::mt19937_64 rng(5);
  const auto ds = blobs(rng, 80, 3, 3, 2.0);
  EXPECT_EQ(fit(c, ds.x, ds.y, 3)->predict(ds.x), ds.y);
}

TEST(Lda, BoundaryIsALine) {
  std::mt19937_64 rng(12);
  const auto ds = blobs(rng, 200, 2, 2);
  const auto m = fit(config(Family::LDA), ds.x, ds.y, 2);
  auto label = [&](double a, double b) { return m->predict_proba_row(std::vector<double>{a, b})[1] > 0.5; };
  std::vector<std::pair<double, double>> probes;
  for (double b : {-0.5, 0.0, 0.5}) {
    // Along this horizontal line the label flips once; bisect for it.
    double lo = -20.0, hi = 20.0;
    ASSERT_NE(label(lo, b), label(hi, b));
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (label(mid, b) == label(lo, b) ? lo : hi) = mid;
    }
    probes.emplace_back(0.5 * (lo + hi), b);
  }
  const double cross = (probes[1].first - probes[0].first) * (probes[2].second - probes[0].second) -
                       (probes[2].first - probes[0].first) * (probes[1].second - probes[0].second);
  EXPECT_NEAR(cross, 0.0, 1e-6);
}

TEST(Learners, InputValidation) {
  Matrix x(30, 2, 1.0);
  std::vector<int> one(30, 0);
  EXPECT_THROW(fit(config(Family::DT), x, one, 2), DegenerateLabelsError);
  std::vector<int> two(30);
  for (std::size_t i = 0; i < 30; ++i) two[i] = static_cast<int>(i % 2), x(i, 0) = static_cast<double>(i);
  x(3, 1) = std::nan("");
  EXPECT_THROW(fit(config(Family::LDA), x, two, 2), DataError);
  x(3, 1) = 0.0;
  const auto m = fit(config(Family::DT), x, two, 2);
  EXPECT_THROW(m->predict_proba(Matrix(2, 3)), DataError);
}

TEST(CrossEntropy, ClosedForms) {
  EXPECT_EQ(cross_entropy(std::vector<double>{1.0, 0.0, 0.0}, 0), 0.0);
  EXPECT_NEAR(cross_entropy(std::vector<double>{0.5, 0.25, 0.25}, 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(cross_entropy(std::vector<double>{0.0, 1.0}, 0), -std::log(1e-12), 1e-9);
}

TEST(Serialisation, RoundTripAndVersionCheck) {
  std::mt19937_64 rng(13);
  const auto ds = blobs(rng, 90, 3, 3);
  for (auto f : kAllFamilies) {
    const auto m = fit(config(f), ds.x, ds.y, 3);
    std::stringstream buf;
    save_model(*m, buf);
    const auto back = load_model(buf);
    EXPECT_EQ(back->family(), f);
    EXPECT_EQ(back->predict_proba(ds.x).data, m->predict_proba(ds.x).data) << to_string(f);
  }
  std::stringstream buf;
  save_model(*fit(config(Family::DT), ds.x, ds.y, 3), buf);
  auto bytes = buf.str();
  bytes[4] = 9;  // version
  std::stringstream bad(bytes);
  EXPECT_THROW(load_model(bad), FormatError);
  std::stringstream junk("NOPE");
  EXPECT_THROW(load_model(junk), FormatError);
}
