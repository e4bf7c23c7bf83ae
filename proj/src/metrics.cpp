#include "qe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace qe {
namespace {

void check_same_length(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw QEError(ErrorCode::LengthMismatch, "paired vectors disagree in length: " +
                                                 std::to_string(a.size()) + " vs " +
                                                 std::to_string(b.size()));
  }
}

void check_correlation_input(const Vector& x, const Vector& y) {
  check_same_length(x, y);
  if (x.size() < 2) {
    throw QEError(ErrorCode::TooFewRows,
                  "correlation needs at least 2 points, got " + std::to_string(x.size()));
  }
  if (x.maxCoeff() == x.minCoeff()) {
    throw QEError(ErrorCode::ConstantInput, "first input is constant; correlation is undefined");
  }
  if (y.maxCoeff() == y.minCoeff()) {
    throw QEError(ErrorCode::ConstantInput, "second input is constant; correlation is undefined");
  }
}

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

double pearson(const Vector& x, const Vector& y) {
  check_correlation_input(x, y);
  const Vector xc = x.array() - x.mean();
  const Vector yc = y.array() - y.mean();
  return xc.dot(yc) / std::sqrt(xc.squaredNorm() * yc.squaredNorm());
}

Vector average_ranks(const Vector& values) {
  const int n = static_cast<int>(values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return values(a) < values(b); });
  Vector ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && values(order[j + 1]) == values(order[i])) ++j;
    // Positions i..j (0-based) hold equal values; their 1-based ranks i+1..j+1
    // are shared as the mean of that range.
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (int k = i; k <= j; ++k) ranks(order[k]) = shared;
    i = j + 1;
  }
  return ranks;
}

double spearman(const Vector& x, const Vector& y) {
  check_correlation_input(x, y);
  return pearson(average_ranks(x), average_ranks(y));
}

double mae(const Vector& pred, const Vector& gold) {
  check_same_length(pred, gold);
  if (pred.size() == 0) throw QEError(ErrorCode::EmptyInput, "no points to score");
  return (pred - gold).cwiseAbs().mean();
}

double rmse(const Vector& pred, const Vector& gold) {
  check_same_length(pred, gold);
  if (pred.size() == 0) throw QEError(ErrorCode::EmptyInput, "no points to score");
  return std::sqrt((pred - gold).squaredNorm() / static_cast<double>(pred.size()));
}

std::string EvalReport::to_key_value() const {
  std::string out;
  out += "n=" + std::to_string(n) + "\n";
  out += "pearson=" + format6(pearson) + "\n";
  out += "spearman=" + format6(spearman) + "\n";
  out += "mae=" + format6(mae) + "\n";
  out += "rmse=" + format6(rmse) + "\n";
  return out;
}

std::string EvalReport::tsv_header() { return "label\tn\tpearson\tspearman\tmae\trmse"; }

std::string EvalReport::to_tsv_row(const std::string& label) const {
  return label + "\t" + std::to_string(n) + "\t" + format6(pearson) + "\t" + format6(spearman) +
         "\t" + format6(mae) + "\t" + format6(rmse);
}

EvalReport evaluate(const Vector& pred, const Vector& gold) {
  EvalReport report;
  report.n = static_cast<int>(pred.size());
  report.pearson = pearson(pred, gold);
  report.spearman = spearman(pred, gold);
  report.mae = mae(pred, gold);
  report.rmse = rmse(pred, gold);
  return report;
}

}  // namespace qe
