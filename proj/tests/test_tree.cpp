#include <doctest.h>

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "netwatt/regression_tree.hpp"

using namespace netwatt;

// ---------------------------------------------------------------------------
// Independent exhaustive-search CART oracle. Kept structurally different from
// the implementation: pointer-based nodes, means recomputed by direct passes,
// every (feature, threshold) candidate enumerated from scratch.

namespace {

struct OracleNode {
  bool leaf = true;
  int feature = -1;
  double threshold = 0;
  double value = 0;
  int count = 0;
  std::unique_ptr<OracleNode> lo, hi;
};

double oracle_mean(const std::vector<EnergySample>& set) {
  double s = 0;
  for (const EnergySample& e : set) s += e.power_mw;
  return s / static_cast<double>(set.size());
}

double oracle_sse(const std::vector<EnergySample>& set) {
  double m = oracle_mean(set), s = 0;
  for (const EnergySample& e : set) s += (e.power_mw - m) * (e.power_mw - m);
  return s;
}

std::unique_ptr<OracleNode> oracle_grow(const std::vector<EnergySample>& set) {
  auto node = std::make_unique<OracleNode>();
  bool splittable = set.size() >= 2 && oracle_sse(set) > 0.0;
  int best_f = -1;
  double best_thr = 0, best_cost = 0;
  if (splittable) {
    for (int f = 0; f < 6; f++) {
      std::vector<double> vals;
      for (const EnergySample& e : set) vals.push_back(e.features[f]);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (size_t i = 0; i + 1 < vals.size(); i++) {
        double thr = 0.5 * (vals[i] + vals[i + 1]);
        std::vector<EnergySample> lo, hi;
        for (const EnergySample& e : set) (e.features[f] <= thr ? lo : hi).push_back(e);
        double cost = oracle_sse(lo) + oracle_sse(hi);
        if (best_f < 0 || cost < best_cost) {
          best_f = f;
          best_thr = thr;
          best_cost = cost;
        }
      }
    }
  }
  if (best_f < 0) {
    node->value = oracle_mean(set);
    node->count = static_cast<int>(set.size());
    return node;
  }
  std::vector<EnergySample> lo, hi;
  for (const EnergySample& e : set) (e.features[best_f] <= best_thr ? lo : hi).push_back(e);
  node->leaf = false;
  node->feature = best_f;
  node->threshold = best_thr;
  node->lo = oracle_grow(lo);
  node->hi = oracle_grow(hi);
  return node;
}

bool same_tree(const RegressionTree& t, int idx, const OracleNode& o) {
  const TreeNode& n = t.nodes[idx];
  if (o.leaf) {
    return n.feature < 0 && n.value == doctest::Approx(o.value).epsilon(1e-12) && n.count == o.count;
  }
  if (n.feature != o.feature) return false;
  if (n.threshold != doctest::Approx(o.threshold).epsilon(1e-12)) return false;
  return same_tree(t, n.left, *o.lo) && same_tree(t, n.right, *o.hi);
}

EnergySample sample(FeatureVector f, double mw) {
  EnergySample s;
  s.features = f;
  s.power_mw = mw;
  return s;
}

std::vector<EnergySample> random_samples(std::mt19937& rng, int n) {
  std::vector<EnergySample> set;
  for (int i = 0; i < n; i++) {
    FeatureVector f;
    f[0] = 1 + static_cast<double>(rng() % 2);
    f[1] = static_cast<double>(rng() % 5);
    f[2] = static_cast<double>(rng() % 3);
    f[3] = static_cast<double>(rng() % 17);
    f[4] = static_cast<double>(rng() % 2);
    f[5] = static_cast<double>(rng() % 2);
    set.push_back(sample(f, 100.0 + static_cast<double>(rng() % 2000) / 10.0));
  }
  return set;
}

std::vector<EnergySample> table1() {
  return {sample({1, 2, 1, 0, 0, 0}, 185), sample({2, 0, 1, 10, 0, 0}, 160), sample({1, 1, 0, 4, 0, 1}, 134)};
}

} // namespace

TEST_CASE("the three profiled rows reproduce their own powers exactly") {
  std::vector<EnergySample> set = table1();
  RegressionTree tree = build_tree(set);
  CHECK(predict(tree, set[0].features) == 185.0);
  CHECK(predict(tree, set[1].features) == 160.0);
  CHECK(predict(tree, set[2].features) == 134.0);
  CHECK(tree.leaf_count() == 3);
  CHECK(training_mse(tree, set) == 0.0);
  CHECK(same_tree(tree, 0, *oracle_grow(set)));
}

TEST_CASE("degenerate sample sets") {
  RegressionTree one = build_tree({sample({1, 2, 1, 0, 0, 0}, 185)});
  CHECK(one.nodes.size() == 1);
  CHECK(predict(one, {1, 2, 1, 0, 0, 0}) == 185.0);

  // identical features cannot be split; the leaf takes the mean
  RegressionTree dup = build_tree({sample({1, 1, 1, 0, 0, 0}, 100), sample({1, 1, 1, 0, 0, 0}, 200)});
  CHECK(dup.nodes.size() == 1);
  CHECK(predict(dup, {1, 1, 1, 0, 0, 0}) == 150.0);

  CHECK_THROWS_AS(build_tree({}), ParseError);
}

TEST_CASE("construction matches the exhaustive oracle on random sets") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 50; trial++) {
    std::vector<EnergySample> set = random_samples(rng, 1 + static_cast<int>(rng() % 10));
    RegressionTree tree = build_tree(set);
    CHECK(same_tree(tree, 0, *oracle_grow(set)));
  }
}

TEST_CASE("prediction is piecewise constant between thresholds") {
  std::mt19937 rng(7);
  std::vector<EnergySample> set = random_samples(rng, 8);
  RegressionTree tree = build_tree(set);
  FeatureVector f = set[3].features;
  double base = predict(tree, f);
  // nudge each feature by less than the half-gap between integer grid points
  for (int i = 0; i < 6; i++) {
    FeatureVector g = f;
    g[i] += 0.2;
    double moved = predict(tree, g);
    bool crossed = false;
    for (const TreeNode& n : tree.nodes)
      if (n.feature == i && f[i] <= n.threshold != (g[i] <= n.threshold)) crossed = true;
    if (!crossed) CHECK(moved == base);
  }
}

TEST_CASE("training error never exceeds the target variance") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 20; trial++) {
    std::vector<EnergySample> set = random_samples(rng, 2 + static_cast<int>(rng() % 9));
    RegressionTree tree = build_tree(set);
    CHECK(training_mse(tree, set) <= oracle_sse(set) / static_cast<double>(set.size()) + 1e-9);
  }
}

TEST_CASE("tree files round-trip") {
  RegressionTree tree = build_tree(table1());
  std::string text = print_tree(tree);
  RegressionTree back = parse_tree(text);
  CHECK(print_tree(back) == text);
  CHECK(predict(back, {1, 2, 1, 0, 0, 0}) == 185.0);
  CHECK_THROWS_AS(parse_tree("nodes 1\nleaf 0 5 1\n"), ParseError);   // missing version
  CHECK_THROWS_AS(parse_tree("version 1\nnodes 1\nsplit 0 9 1 0 0\n"), ParseError); // bad feature
}
