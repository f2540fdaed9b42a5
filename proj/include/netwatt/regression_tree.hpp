#ifndef NETWATT_REGRESSION_TREE_HPP
#define NETWATT_REGRESSION_TREE_HPP

#include <string>
#include <string_view>
#include <vector>

#include "netwatt/isa.hpp"

namespace netwatt {

struct EnergySample {
  std::string mnemonic;
  FeatureVector features{};
  double power_mw = 0; // at the profile's reference operating point
};

// Binary decision tree over the instruction feature vector with mean-power
// leaves. Node 0 is the root; leaves have feature = -1.
struct TreeNode {
  int feature = -1;     // 0-5, or -1 for a leaf
  double threshold = 0; // go left iff features[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0; // leaf: mean power, mW
  int count = 0;    // leaf: training samples routed here
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  bool empty() const { return nodes.empty(); }
  int leaf_count() const;
  int depth() const;
};

// Greedy CART construction: each node takes the (feature, threshold) pair
// minimising the summed child squared error, thresholds at midpoints of
// consecutive sorted unique feature values, ties broken by lowest feature
// index then lowest threshold. A node splits while it has >= 2 samples, target
// variance, and at least one usable threshold; leaves hold the sample mean.
RegressionTree build_tree(const std::vector<EnergySample>& samples);

double predict(const RegressionTree& tree, const FeatureVector& features);

// Mean squared error of the tree against its own training set.
double training_mse(const RegressionTree& tree, const std::vector<EnergySample>& samples);

RegressionTree parse_tree(std::string_view text);
std::string print_tree(const RegressionTree& tree);

} // namespace netwatt

#endif
