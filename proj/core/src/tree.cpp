#include <algorithm>
#include <cmath>
#include <numeric>

#include "binary_io.hpp"
#include "selfcare/errors.hpp"
#include "selfcare/learners.hpp"
#include "selfcare/rng.hpp"

namespace selfcare::learners {
namespace {

// w*H(w/W) in nats, up to the W log W term shared by both children.
double weighted_impurity(const double* w, int k, double total) {
  if (total <= 0.0) return 0.0;
  double s = total * std::log(total);
  for (int c = 0; c < k; ++c) {
    if (w[c] > 0.0) s -= w[c] * std::log(w[c]);
  }
  return s;
}

// Modulo bias is below 2^-50 for any feature count we meet.
std::uint64_t bounded(Rng& rng, std::uint64_t n) { return rng() % n; }

struct Split {
  int feature = -1;
  double threshold = 0.0;
  std::size_t n_left = 0;
};

}  // namespace

void DecisionTree::fit(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                       const TreeParams& params) {
  const std::size_t d = x.cols;
  const int k = params.n_classes;
  n_classes_ = k;
  nodes_.clear();
  leaf_probs_.clear();

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (weights.empty() || weights[i] > 0.0) active.push_back(i);
  }
  auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  // Per-feature orderings of the active samples; each node owns the same
  // [begin, end) slice in every list.
  std::vector<std::vector<std::size_t>> order(d, active);
  for (std::size_t f = 0; f < d; ++f) {
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
  }

  const std::size_t max_features =
      params.max_features > 0 ? std::min<std::size_t>(static_cast<std::size_t>(params.max_features), d) : d;
  Rng rng(params.seed);

  struct Pending {
    int node;
    std::size_t begin, end;
    int depth;
  };
  std::vector<Pending> stack;
  nodes_.push_back({});
  leaf_probs_.resize(static_cast<std::size_t>(k), 0.0);
  stack.push_back({0, 0, active.size(), 0});

  std::vector<double> node_w(static_cast<std::size_t>(k)), left_w(static_cast<std::size_t>(k)),
      right_w(static_cast<std::size_t>(k));
  std::vector<char> goes_left(x.rows, 0);
  std::vector<std::size_t> buffer;
  std::vector<std::size_t> features(d);

  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    const std::size_t count = p.end - p.begin;

    std::fill(node_w.begin(), node_w.end(), 0.0);
    double total = 0.0;
    const auto& any = order.empty() ? active : order[0];
    for (std::size_t j = p.begin; j < p.end; ++j) {
      const std::size_t i = d == 0 ? active[j] : any[j];
      node_w[static_cast<std::size_t>(y[i])] += weight(i);
      total += weight(i);
    }
    double* probs = &leaf_probs_[static_cast<std::size_t>(p.node) * static_cast<std::size_t>(k)];
    for (int c = 0; c < k; ++c) probs[c] = total > 0.0 ? node_w[static_cast<std::size_t>(c)] / total : 0.0;

    const int classes_present =
        static_cast<int>(std::count_if(node_w.begin(), node_w.end(), [](double v) { return v > 0.0; }));
    if (d == 0 || classes_present < 2 || count < static_cast<std::size_t>(params.min_samples_split) ||
        (params.max_depth > 0 && p.depth >= params.max_depth)) {
      continue;
    }

    // Candidate features: all of them, or the first max_features
    // non-constant ones of a random permutation, scanned in index order.
    std::vector<std::size_t> candidates;
    auto non_constant = [&](std::size_t f) { return x(order[f][p.begin], f) < x(order[f][p.end - 1], f); };
    if (max_features >= d) {
      for (std::size_t f = 0; f < d; ++f) candidates.push_back(f);
    } else {
      std::iota(features.begin(), features.end(), std::size_t{0});
      for (std::size_t a = 0; a < d && candidates.size() < max_features; ++a) {
        const std::size_t b = a + bounded(rng, d - a);
        std::swap(features[a], features[b]);
        if (non_constant(features[a])) candidates.push_back(features[a]);
      }
      std::sort(candidates.begin(), candidates.end());
    }

    const double parent = weighted_impurity(node_w.data(), k, total);
    const double tol = 1e-12 * total;
    double best_score = parent - tol;  // a split must beat the parent
    Split best;
    for (auto f : candidates) {
      const auto& ord = order[f];
      std::fill(left_w.begin(), left_w.end(), 0.0);
      double wl = 0.0;
      for (std::size_t j = p.begin; j + 1 < p.end; ++j) {
        const std::size_t i = ord[j];
        left_w[static_cast<std::size_t>(y[i])] += weight(i);
        wl += weight(i);
        const double v = x(i, f);
        const double next = x(ord[j + 1], f);
        if (!(next > v)) continue;
        for (int c = 0; c < k; ++c) {
          right_w[static_cast<std::size_t>(c)] = node_w[static_cast<std::size_t>(c)] - left_w[static_cast<std::size_t>(c)];
          if (right_w[static_cast<std::size_t>(c)] < 0.0) right_w[static_cast<std::size_t>(c)] = 0.0;
        }
        const double score = weighted_impurity(left_w.data(), k, wl) + weighted_impurity(right_w.data(), k, total - wl);
        if (score < best_score - (best.feature >= 0 ? tol : 0.0)) {
          best_score = score;
          double mid = 0.5 * (v + next);
          if (!(mid < next)) mid = v;
          best = {static_cast<int>(f), mid, j + 1 - p.begin};
        }
      }
    }
    if (best.feature < 0) continue;

    // Stable partition of every ordering by the chosen split.
    const auto bf = static_cast<std::size_t>(best.feature);
    for (std::size_t j = p.begin; j < p.end; ++j) {
      const std::size_t i = order[bf][j];
      goes_left[i] = x(i, bf) <= best.threshold ? 1 : 0;
    }
    for (std::size_t f = 0; f < d; ++f) {
      auto& ord = order[f];
      buffer.assign(ord.begin() + static_cast<std::ptrdiff_t>(p.begin), ord.begin() + static_cast<std::ptrdiff_t>(p.end));
      auto out = ord.begin() + static_cast<std::ptrdiff_t>(p.begin);
      for (auto i : buffer) {
        if (goes_left[i]) *out++ = i;
      }
      for (auto i : buffer) {
        if (!goes_left[i]) *out++ = i;
      }
    }

    const int left = static_cast<int>(nodes_.size());
    const int right = left + 1;
    nodes_[static_cast<std::size_t>(p.node)] = {best.feature, best.threshold, left, right};
    nodes_.push_back({});
    nodes_.push_back({});
    leaf_probs_.resize(nodes_.size() * static_cast<std::size_t>(k), 0.0);
    const std::size_t mid = p.begin + best.n_left;
    stack.push_back({right, mid, p.end, p.depth + 1});
    stack.push_back({left, p.begin, mid, p.depth + 1});
  }
}

std::span<const double> DecisionTree::predict_row(std::span<const double> x) const {
  std::size_t node = 0;
  while (nodes_[node].feature >= 0) {
    const auto& n = nodes_[node];
    node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return {leaf_probs_.data() + node * static_cast<std::size_t>(n_classes_), static_cast<std::size_t>(n_classes_)};
}

std::size_t DecisionTree::internal_nodes() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature >= 0; }));
}

void DecisionTree::write(std::ostream& out) const {
  using namespace detail;
  put_u32(out, static_cast<std::uint32_t>(n_classes_));
  put_u32(out, static_cast<std::uint32_t>(nodes_.size()));
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    put_i32(out, n.feature);
    put_f64(out, n.threshold);
    put_i32(out, n.left);
    put_i32(out, n.right);
    for (int c = 0; c < n_classes_; ++c) put_f64(out, leaf_probs_[i * static_cast<std::size_t>(n_classes_) + static_cast<std::size_t>(c)]);
  }
}

DecisionTree DecisionTree::read(std::istream& in) {
  using namespace detail;
  DecisionTree t;
  t.n_classes_ = static_cast<int>(get_count(in, 1024, "class"));
  const auto n = get_count(in, 1u << 26, "node");
  if (t.n_classes_ < 1 || n < 1) throw FormatError("model container: empty tree");
  t.nodes_.resize(n);
  t.leaf_probs_.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(t.n_classes_));
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = t.nodes_[i];
    node.feature = get_i32(in);
    node.threshold = get_f64(in);
    node.left = get_i32(in);
    node.right = get_i32(in);
    for (int c = 0; c < t.n_classes_; ++c) {
      t.leaf_probs_[i * static_cast<std::size_t>(t.n_classes_) + static_cast<std::size_t>(c)] = get_f64(in);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = t.nodes_[i];
    if (node.feature < 0) continue;
    // children always follow their parent, which also rules out cycles
    const auto bad = [&](int c) { return c <= static_cast<int>(i) || static_cast<std::uint32_t>(c) >= n; };
    if (bad(node.left) || bad(node.right)) throw FormatError("model container: tree child index out of range");
  }
  return t;
}

}  // namespace selfcare::learners
