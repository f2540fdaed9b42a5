#include "netwatt/regression_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "netwatt/num_io.hpp"

namespace netwatt {

int RegressionTree::leaf_count() const {
  int n = 0;
  for (const TreeNode& node : nodes)
    if (node.feature < 0) n++;
  return n;
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::function<int(int)> walk = [&](int idx) -> int {
    const TreeNode& n = nodes[idx];
    if (n.feature < 0) return 1;
    return 1 + std::max(walk(n.left), walk(n.right));
  };
  return walk(0);
}

namespace {

double mean_power(const std::vector<const EnergySample*>& set) {
  double sum = 0;
  for (const EnergySample* s : set) sum += s->power_mw;
  return sum / static_cast<double>(set.size());
}

double sse(const std::vector<const EnergySample*>& set) {
  double m = mean_power(set);
  double sum = 0;
  for (const EnergySample* s : set) {
    double d = s->power_mw - m;
    sum += d * d;
  }
  return sum;
}

struct Split {
  int feature = -1;
  double threshold = 0;
  double cost = 0;
};

bool find_best_split(const std::vector<const EnergySample*>& set, Split& best) {
  bool found = false;
  for (int f = 0; f < 6; f++) {
    std::vector<double> vals;
    vals.reserve(set.size());
    for (const EnergySample* s : set) vals.push_back(s->features[f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (size_t i = 0; i + 1 < vals.size(); i++) {
      double thr = (vals[i] + vals[i + 1]) / 2.0;
      std::vector<const EnergySample*> left, right;
      for (const EnergySample* s : set) (s->features[f] <= thr ? left : right).push_back(s);
      double cost = sse(left) + sse(right);
      if (!found || cost < best.cost) { // strict: ties keep the lowest (feature, threshold)
        best = {f, thr, cost};
        found = true;
      }
    }
  }
  return found;
}

} // namespace

RegressionTree build_tree(const std::vector<EnergySample>& samples) {
  if (samples.empty()) throw ParseError("cannot build a tree from an empty sample list");
  RegressionTree tree;
  std::function<int(std::vector<const EnergySample*>)> grow = [&](std::vector<const EnergySample*> set) -> int {
    int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    bool pure = sse(set) == 0.0;
    Split best;
    if (set.size() >= 2 && !pure && find_best_split(set, best)) {
      std::vector<const EnergySample*> left, right;
      for (const EnergySample* s : set) (s->features[best.feature] <= best.threshold ? left : right).push_back(s);
      tree.nodes[idx].feature = best.feature;
      tree.nodes[idx].threshold = best.threshold;
      int l = grow(std::move(left));
      int r = grow(std::move(right));
      tree.nodes[idx].left = l;
      tree.nodes[idx].right = r;
    } else {
      tree.nodes[idx].value = mean_power(set);
      tree.nodes[idx].count = static_cast<int>(set.size());
    }
    return idx;
  };
  std::vector<const EnergySample*> all;
  all.reserve(samples.size());
  for (const EnergySample& s : samples) all.push_back(&s);
  grow(std::move(all));
  return tree;
}

double predict(const RegressionTree& tree, const FeatureVector& features) {
  if (tree.empty()) throw ParseError("predict on an empty tree");
  int idx = 0;
  while (tree.nodes[idx].feature >= 0) {
    const TreeNode& n = tree.nodes[idx];
    idx = features[n.feature] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[idx].value;
}

double training_mse(const RegressionTree& tree, const std::vector<EnergySample>& samples) {
  if (samples.empty()) return 0;
  double sum = 0;
  for (const EnergySample& s : samples) {
    double d = predict(tree, s.features) - s.power_mw;
    sum += d * d;
  }
  return sum / static_cast<double>(samples.size());
}

std::string print_tree(const RegressionTree& tree) {
  std::ostringstream os;
  os << "version 1\n";
  os << "nodes " << tree.nodes.size() << '\n';
  for (size_t i = 0; i < tree.nodes.size(); i++) {
    const TreeNode& n = tree.nodes[i];
    if (n.feature >= 0)
      os << "split " << i << ' ' << n.feature << ' ' << num_str(n.threshold) << ' ' << n.left << ' ' << n.right
         << '\n';
    else
      os << "leaf " << i << ' ' << num_str(n.value) << ' ' << n.count << '\n';
  }
  return os.str();
}

RegressionTree parse_tree(std::string_view text) {
  RegressionTree tree;
  bool saw_version = false;
  size_t declared = 0;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    line_no++;
    std::string_view rest = line, tok;
    if (!next_token(rest, tok)) continue;
    auto want_i64 = [&](const char* what) {
      std::string_view t;
      std::int64_t v;
      if (!next_token(rest, t) || !parse_i64(t, v)) throw ParseError(std::string("expected ") + what, line_no);
      return v;
    };
    auto want_double = [&](const char* what) {
      std::string_view t;
      double v;
      if (!next_token(rest, t) || !parse_double(t, v)) throw ParseError(std::string("expected ") + what, line_no);
      return v;
    };
    if (tok == "version") {
      saw_version = true;
    } else if (tok == "nodes") {
      declared = static_cast<size_t>(want_i64("node count"));
      tree.nodes.resize(declared);
    } else if (tok == "split") {
      size_t idx = static_cast<size_t>(want_i64("node index"));
      if (idx >= tree.nodes.size()) throw ParseError("node index out of range", line_no);
      TreeNode& n = tree.nodes[idx];
      n.feature = static_cast<int>(want_i64("feature index"));
      if (n.feature < 0 || n.feature > 5) throw ParseError("feature index must be 0-5", line_no);
      n.threshold = want_double("threshold");
      n.left = static_cast<int>(want_i64("left child"));
      n.right = static_cast<int>(want_i64("right child"));
      if (n.left < 0 || n.right < 0 || n.left >= static_cast<int>(declared) || n.right >= static_cast<int>(declared))
        throw ParseError("child index out of range", line_no);
    } else if (tok == "leaf") {
      size_t idx = static_cast<size_t>(want_i64("node index"));
      if (idx >= tree.nodes.size()) throw ParseError("node index out of range", line_no);
      TreeNode& n = tree.nodes[idx];
      n.feature = -1;
      n.value = want_double("leaf value");
      n.count = static_cast<int>(want_i64("sample count"));
    } else {
      throw ParseError("unknown record '" + std::string(tok) + "'", line_no);
    }
  }
  if (!saw_version) throw ParseError("tree file missing version header");
  return tree;
}

} // namespace netwatt
