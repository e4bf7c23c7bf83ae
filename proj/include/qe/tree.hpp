#pragma once

#include <vector>

#include "qe/types.hpp"

namespace qe {

// CART regression tree with greedy variance-reduction splits. Thresholds are
// midpoints between consecutive distinct feature values; rows with
// feature <= threshold go left. A node becomes a leaf at max_depth, below
// min_samples_split, or when no split strictly reduces weighted squared
// error. Ties prefer the smaller feature index, then the smaller threshold.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  std::vector<Node> nodes;  // nodes[0] is the root

  double predict(const Eigen::Ref<const Vector>& x) const;
  int depth() const;
};

// rows is n x n_features; targets has n entries; sample_weights (optional)
// must be non-negative with a positive sum. Leaf values are weighted means.
RegressionTree fit_tree(const Matrix& rows, const Vector& targets, int min_samples_split,
                        int max_depth, const Vector* sample_weights = nullptr);

}  // namespace qe
