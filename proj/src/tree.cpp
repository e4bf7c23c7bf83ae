#include "qe/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qe {
namespace {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double improvement = 0.0;
};

struct TreeBuilder {
  const Matrix& rows;
  const Vector& targets;
  const Vector& weights;
  int min_samples_split;
  int max_depth;
  std::vector<RegressionTree::Node> nodes;

  // Weighted sum-of-squared-error of a group given its weight/target sums.
  static double group_sse(double w_sum, double wy_sum, double wyy_sum) {
    if (w_sum <= 0.0) return 0.0;
    return std::max(0.0, wyy_sum - wy_sum * wy_sum / w_sum);
  }

  SplitChoice best_split(const std::vector<int>& idx) const {
    double w_sum = 0.0, wy_sum = 0.0, wyy_sum = 0.0;
    for (int i : idx) {
      const double w = weights(i);
      w_sum += w;
      wy_sum += w * targets(i);
      wyy_sum += w * targets(i) * targets(i);
    }
    const double parent_sse = group_sse(w_sum, wy_sum, wyy_sum);
    // Guards against splitting on float noise when targets are constant.
    const double min_gain = 1e-12 + 1e-9 * parent_sse;

    SplitChoice best;
    std::vector<int> order(idx);
    const int n_features = static_cast<int>(rows.cols());
    for (int f = 0; f < n_features; ++f) {
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (rows(a, f) != rows(b, f)) return rows(a, f) < rows(b, f);
        return a < b;
      });
      double lw = 0.0, lwy = 0.0, lwyy = 0.0;
      for (size_t k = 0; k + 1 < order.size(); ++k) {
        const int i = order[k];
        const double w = weights(i);
        lw += w;
        lwy += w * targets(i);
        lwyy += w * targets(i) * targets(i);
        const double x_here = rows(i, f);
        const double x_next = rows(order[k + 1], f);
        if (x_here == x_next) continue;
        const double gain = parent_sse - group_sse(lw, lwy, lwyy) -
                            group_sse(w_sum - lw, wy_sum - lwy, wyy_sum - lwyy);
        // Strict ">" keeps the first candidate on ties: features and
        // thresholds are scanned in ascending order.
        if (gain > min_gain && gain > best.improvement) {
          best.found = true;
          best.feature = f;
          best.threshold = x_here + (x_next - x_here) / 2.0;
          best.improvement = gain;
        }
      }
    }
    return best;
  }

  int build(const std::vector<int>& idx, int depth) {
    double w_sum = 0.0, wy_sum = 0.0;
    for (int i : idx) {
      w_sum += weights(i);
      wy_sum += weights(i) * targets(i);
    }
    const int me = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[me].value = w_sum > 0.0 ? wy_sum / w_sum : 0.0;

    if (depth >= max_depth || static_cast<int>(idx.size()) < min_samples_split) return me;
    const SplitChoice split = best_split(idx);
    if (!split.found) return me;

    std::vector<int> left_idx, right_idx;
    for (int i : idx) {
      (rows(i, split.feature) <= split.threshold ? left_idx : right_idx).push_back(i);
    }
    nodes[me].feature = split.feature;
    nodes[me].threshold = split.threshold;
    const int left = build(left_idx, depth + 1);
    nodes[me].left = left;
    const int right = build(right_idx, depth + 1);
    nodes[me].right = right;
    return me;
  }
};

}  // namespace

double RegressionTree::predict(const Eigen::Ref<const Vector>& x) const {
  if (nodes.empty()) throw QEError(ErrorCode::NotFitted, "tree has no nodes");
  int at = 0;
  while (nodes[at].feature >= 0) {
    const Node& n = nodes[at];
    if (n.feature >= x.size()) {
      throw QEError(ErrorCode::ShapeMismatch, "tree expects feature " + std::to_string(n.feature) +
                                                  " but row has " + std::to_string(x.size()));
    }
    at = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  return nodes[at].value;
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes[at].feature >= 0) {
      stack.push_back({nodes[at].left, d + 1});
      stack.push_back({nodes[at].right, d + 1});
    }
  }
  return deepest;
}

RegressionTree fit_tree(const Matrix& rows, const Vector& targets, int min_samples_split,
                        int max_depth, const Vector* sample_weights) {
  if (rows.rows() == 0) throw QEError(ErrorCode::EmptyBatch, "cannot fit a tree on zero rows");
  if (rows.rows() != targets.size()) {
    throw QEError(ErrorCode::LengthMismatch,
                  "tree rows/targets disagree: " + std::to_string(rows.rows()) + " vs " +
                      std::to_string(targets.size()));
  }
  if (min_samples_split < 2) {
    throw QEError(ErrorCode::InvalidConfig, "min_samples_split must be at least 2");
  }
  if (max_depth < 0) throw QEError(ErrorCode::InvalidConfig, "max_depth must be non-negative");

  Vector uniform;
  if (sample_weights == nullptr) {
    uniform = Vector::Ones(rows.rows());
  } else {
    if (sample_weights->size() != rows.rows()) {
      throw QEError(ErrorCode::LengthMismatch, "sample weight count does not match row count");
    }
    if ((sample_weights->array() < 0.0).any() || sample_weights->sum() <= 0.0) {
      throw QEError(ErrorCode::InvalidConfig,
                    "sample weights must be non-negative with a positive sum");
    }
  }
  const Vector& w = sample_weights ? *sample_weights : uniform;

  TreeBuilder builder{rows, targets, w, min_samples_split, max_depth, {}};
  std::vector<int> idx(rows.rows());
  std::iota(idx.begin(), idx.end(), 0);
  builder.build(idx, 0);

  RegressionTree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

}  // namespace qe
