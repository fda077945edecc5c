// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "peakctc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace peakctc {

double LogSumExp(std::span<const double> values) {
  if (values.empty())
    throw std::invalid_argument("LogSumExp: empty input");
  double m = kLogZero;
  for (double v : values) m = std::max(m, v);
  if (m == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

double LogSumExp2(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a == kLogZero) return kLogZero;
  return a + std::log1p(std::exp(b - a));
}

double LogSumExp3(double a, double b, double c) {
  double m = std::max(a, std::max(b, c));
  if (m == kLogZero) return kLogZero;
  return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

Matrix TemperedSoftmaxRows(const Matrix &logits, double tau) {
  if (!(tau > 0.0))
    throw std::invalid_argument("TemperedSoftmaxRows: tau must be positive");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double *in = logits.row_ptr(r);
    double *o = out.row_ptr(r);
    double m = kLogZero;
    for (std::size_t c = 0; c < logits.cols(); ++c) m = std::max(m, in[c] / tau);
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      o[c] = std::exp(in[c] / tau - m);
      sum += o[c];
    }
    for (std::size_t c = 0; c < logits.cols(); ++c) o[c] /= sum;
  }
  return out;
}

double NearestRankPercentile(std::span<const double> values, double q) {
  if (values.empty())
    throw std::invalid_argument("NearestRankPercentile: empty input");
  if (!(q > 0.0) || q > 100.0)
    throw std::invalid_argument("NearestRankPercentile: q must be in (0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * n));
  if (rank == 0) rank = 1;
  return sorted[rank - 1];
}

}  // namespace peakctc
