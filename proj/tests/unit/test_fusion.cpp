#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "selfcare/errors.hpp"
#include "selfcare/fusion.hpp"

using namespace selfcare;
using namespace selfcare::fusion;

namespace {

// Every probability vector with `n` entries on a grid of the given step.
std::vector<std::vector<double>> simplex_grid(int n, int steps) {
  std::vector<std::vector<double>> out;
  std::vector<int> c(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      c[static_cast<std::size_t>(i)] = left;
      std::vector<double> p;
      for (int v : c) p.push_back(static_cast<double>(v) / steps);
      out.push_back(p);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      c[static_cast<std::size_t>(i)] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, steps);
  return out;
}

std::vector<std::size_t> ids(std::initializer_list<std::size_t> v) { return v; }

}  // namespace

TEST(Catalog, ShapesAndLookups) {
  EXPECT_EQ(catalog(Device::Wrist).size(), 5u);
  EXPECT_EQ(catalog(Device::Chest).size(), 42u);
  EXPECT_EQ(find_branch("WB1").sensors, (std::vector<Sensor>{Sensor::BVP, Sensor::EDA, Sensor::TEMP}));
  EXPECT_EQ(find_branch("WB3").sensors, (std::vector<Sensor>{Sensor::BVP, Sensor::EDA}));
  EXPECT_EQ(catalog_index("CB12"), 11u);
  EXPECT_THROW(find_branch("WB9"), ConfigError);
  for (auto d : {Device::Wrist, Device::Chest}) {
    const auto sensors = device_sensors(d);
    for (const auto& b : catalog(d)) {
      EXPECT_FALSE(b.sensors.empty()) << b.id;
      EXPECT_TRUE(std::is_sorted(b.sensors.begin(), b.sensors.end())) << b.id;
      for (auto s : b.sensors) EXPECT_NE(std::find(sensors.begin(), sensors.end(), s), sensors.end()) << b.id;
    }
  }
  EXPECT_EQ(default_context_sensor(Device::Wrist), Sensor::ACC);
  EXPECT_EQ(default_context_sensor(Device::Chest), Sensor::EMG);
}

TEST(EarlyFusion, ConcatenatesInCanonicalOrder) {
  const auto& wb3 = find_branch("WB3");
  std::map<Sensor, std::vector<double>> parts = {{Sensor::EDA, {3, 4}}, {Sensor::BVP, {1, 2}}};
  EXPECT_EQ(early_fuse(parts, wb3).values, (std::vector<double>{1, 2, 3, 4}));
  const auto& wb1 = find_branch("WB1");
  EXPECT_EQ(wb1.feature_count(), features::feature_count(Sensor::BVP) + features::feature_count(Sensor::EDA) +
                                     features::feature_count(Sensor::TEMP));
  try {
    early_fuse(parts, wb1);
    FAIL();
  } catch (const MissingModalityError& e) {
    EXPECT_NE(std::string(e.what()).find("TEMP"), std::string::npos);
  }
  BranchSpec single{"X", Device::Wrist, {Sensor::EDA}, learners::Family::RF};
  EXPECT_EQ(early_fuse(parts, single).values, (std::vector<double>{3, 4}));
}

TEST(Shortlist, OrdersByTotalLoss) {
  const auto& c = catalog(Device::Wrist);
  const std::vector<BranchSpec> cands(c.begin(), c.end());
  const std::vector<double> ce = {5.0, 1.0, 3.0, 1.0, 9.0};
  const auto top = shortlist_branches(cands, ce, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].id, "WB2");  // tie with WB4 goes to catalog order
  EXPECT_EQ(top[1].id, "WB4");
  EXPECT_EQ(top[2].id, "WB3");
  EXPECT_EQ(shortlist_branches(std::span(cands).first(1), std::span(ce).first(1), 3).size(), 1u);
}

TEST(GatingLabels, ArgminWithTieRules) {
  const std::vector<BranchSpec> b = {find_branch("WB1"), find_branch("WB2"), find_branch("WB3")};
  learners::Matrix ce(3, 3);
  const double rows[3][3] = {{0.1, 0.5, 0.9}, {0.4, 0.4, 0.4}, {0.7, 0.2, 0.2}};
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) ce(static_cast<std::size_t>(r), static_cast<std::size_t>(k)) = rows[r][k];
  EXPECT_EQ(gating_labels(ce, b), (std::vector<int>{0, 2, 2}));
  const std::vector<BranchSpec> same = {find_branch("WB2"), find_branch("WB1")};  // both three sensors
  learners::Matrix tie(1, 2, 0.3);
  EXPECT_EQ(gating_labels(tie, same), (std::vector<int>{1}));  // WB1 comes first in the catalog
}

TEST(GateSelect, Examples) {
  const std::vector<double> p = {0.6, 0.3, 0.1};
  EXPECT_EQ(gate_select(p, 0.0).selected, ids({0}));
  EXPECT_EQ(gate_select(p, 1.0).selected, ids({0, 1, 2}));
  EXPECT_EQ(gate_select(std::vector<double>{0.5, 0.45, 0.05}, 0.10).selected, ids({0, 1}));
  EXPECT_EQ(gate_select(std::vector<double>{0.4, 0.4, 0.2}, 0.0).selected, ids({0, 1}));
  EXPECT_THROW(gate_select(p, 1.5), ConfigError);
  EXPECT_THROW(gate_select(p, -0.1), ConfigError);
}

TEST(GateSelect, MonotoneInDeltaOverGrid) {
  const auto grid = simplex_grid(3, 20);
  for (const auto& p : grid) {
    std::vector<std::size_t> prev;
    for (int d = 0; d <= 20; ++d) {
      const auto sel = gate_select(p, d * 0.05).selected;
      ASSERT_FALSE(sel.empty());
      ASSERT_TRUE(std::includes(sel.begin(), sel.end(), prev.begin(), prev.end()));
      const auto top = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      ASSERT_TRUE(std::binary_search(sel.begin(), sel.end(), top));
      prev = sel;
    }
    ASSERT_EQ(prev.size(), 3u);
  }
}

TEST(Votes, Examples) {
  using V = std::vector<std::vector<double>>;
  EXPECT_EQ(hard_vote(V{{0.1, 0.9}, {0.2, 0.8}, {0.7, 0.3}}), 1);
  EXPECT_EQ(hard_vote(V{{0.3, 0.7}}), 1);
  EXPECT_EQ(hard_vote(V{{0.6, 0.4, 0.0}, {0.0, 0.1, 0.9}}), 2);  // 1-1 tie, class 2 has more mass
  EXPECT_EQ(soft_vote(V{{0.6, 0.4}, {0.2, 0.8}}), 1);
  EXPECT_EQ(soft_vote(V{{0.2, 0.5, 0.3}, {0.2, 0.5, 0.3}}), 1);
  EXPECT_EQ(soft_vote(V{{0, 0, 1}, {0, 0, 1}}), 2);
}

// Brute-force oracle over every one, two and three branch input on a 0.1
// grid, with masses counted exactly in tenths.
TEST(Votes, MatchBruteForceOracle) {
  auto tenths = [](double p) { return std::lround(p * 10.0); };
  using V = std::vector<std::vector<double>>;
  const auto grid = simplex_grid(3, 10);
  auto oracle_hard = [&](const std::vector<std::vector<double>>& ps) {
    long count[3] = {0, 0, 0}, mass[3] = {0, 0, 0};
    for (const auto& p : ps) {
      int a = 0;
      for (int c = 1; c < 3; ++c)
        if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(a)]) a = c;
      count[a] += 1;
      for (int c = 0; c < 3; ++c) mass[c] += tenths(p[static_cast<std::size_t>(c)]);
    }
    int best = 0;
    for (int c = 1; c < 3; ++c) {
      if (count[c] > count[best] || (count[c] == count[best] && mass[c] > mass[best])) best = c;
    }
    return best;
  };
  auto oracle_soft = [&](const std::vector<std::vector<double>>& ps) {
    long mass[3] = {0, 0, 0};
    for (const auto& p : ps)
      for (int c = 0; c < 3; ++c) mass[c] += tenths(p[static_cast<std::size_t>(c)]);
    int best = 0;
    for (int c = 1; c < 3; ++c)
      if (mass[c] > mass[best]) best = c;
    return best;
  };
  std::size_t cases = 0;
  for (const auto& a : grid) {
    ASSERT_EQ(hard_vote(V{a}), oracle_hard({a}));
    for (const auto& b : grid) {
      ASSERT_EQ(hard_vote(V{a, b}), oracle_hard({a, b}));
      ASSERT_EQ(soft_vote(V{a, b}), oracle_soft({a, b}));
      ++cases;
    }
  }
  for (const auto& a : grid) {
    for (const auto& b : grid) {
      for (const auto& c : grid) {
        const V ps = {a, b, c};
        ASSERT_EQ(hard_vote(ps), oracle_hard(ps));
        ASSERT_EQ(soft_vote(ps), oracle_soft(ps));
      }
    }
  }
  EXPECT_EQ(cases, grid.size() * grid.size());
}

TEST(Gate, ConstantLabelsAlwaysPickThatBranch) {
  learners::Matrix ctx(50, 4);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (auto& v : ctx.data) v = n(rng);
  const std::vector<int> labels(50, 0);
  const auto gate = train_gate(ctx, labels, 3, Sensor::ACC);
  EXPECT_EQ(gate.n_branches(), 3u);
  for (std::size_t r = 0; r < 50; ++r) {
    const auto d = gate_select(gate.probabilities(ctx.row(r)), 0.0);
    EXPECT_EQ(d.selected, ids({0}));
  }
}

TEST(Gate, LearnsContextSplit) {
  learners::Matrix ctx(200, 1);
  std::vector<int> labels(200);
  for (std::size_t r = 0; r < 200; ++r) {
    ctx(r, 0) = static_cast<double>(r);
    labels[r] = r < 100 ? 0 : 2;
  }
  const auto gate = train_gate(ctx, labels, 3, Sensor::EMG);
  EXPECT_EQ(gate.context(), Sensor::EMG);
  EXPECT_EQ(argmax(gate.probabilities(std::vector<double>{10.0})), 0);
  EXPECT_EQ(argmax(gate.probabilities(std::vector<double>{150.0})), 2);
}
