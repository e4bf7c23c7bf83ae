#pragma once

#include <string>
#include <vector>

#include "qe/types.hpp"

namespace qe {

// Population-variance Pearson correlation. Inputs must have equal length
// >= 2 and neither may be constant (ConstantInput instead of a NaN or a
// silent 0, so degenerate submissions surface loudly).
double pearson(const Vector& x, const Vector& y);

// Pearson over average ranks; ties share the mean of their rank range.
double spearman(const Vector& x, const Vector& y);

double mae(const Vector& pred, const Vector& gold);
double rmse(const Vector& pred, const Vector& gold);

struct EvalReport {
  double pearson = 0.0;
  double spearman = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  int n = 0;

  // "pearson=0.123456" style lines, one metric per line plus n.
  std::string to_key_value() const;
  // One row for cross-pair aggregation; header() matches its column order.
  static std::string tsv_header();
  std::string to_tsv_row(const std::string& label) const;
};

EvalReport evaluate(const Vector& pred, const Vector& gold);

// Average ranks (1-based) with ties sharing their mean rank.
Vector average_ranks(const Vector& values);

}  // namespace qe
