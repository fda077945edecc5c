// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef PEAKCTC_NUMERICS_HPP_
#define PEAKCTC_NUMERICS_HPP_

#include <limits>
#include <span>
#include <vector>

#include "peakctc/matrix.hpp"

namespace peakctc {

// Log-domain zero. Arithmetic convention: kLogZero + x = kLogZero,
// log_sum_exp(kLogZero, x) = x. NaN never appears in log-domain values.
constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// ln(sum_i exp(v_i)), max-shifted so no intermediate overflows.
// Returns kLogZero when every input is kLogZero. Empty input is a usage
// error (std::invalid_argument).
double LogSumExp(std::span<const double> values);

// Two- and three-way forms used in the DP inner loops.
double LogSumExp2(double a, double b);
double LogSumExp3(double a, double b, double c);

// Row-wise softmax of logits/tau. Each output row sums to 1 and every
// entry is strictly positive. tau <= 0 is a usage error.
Matrix TemperedSoftmaxRows(const Matrix &logits, double tau);

// Nearest-rank percentile: sort ascending, take element ceil(q/100 * n) - 1.
// q in (0, 100]; empty input is a usage error. Always returns a member of
// the input.
double NearestRankPercentile(std::span<const double> values, double q);

}  // namespace peakctc

#endif  // PEAKCTC_NUMERICS_HPP_
