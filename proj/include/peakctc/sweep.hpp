// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef PEAKCTC_SWEEP_HPP_
#define PEAKCTC_SWEEP_HPP_

#include <string>
#include <vector>

#include "peakctc/trainer.hpp"

namespace peakctc {

// Regularization-weight sweep: one training run per lambda with shared
// seeds and shared encoder/optimizer settings, evaluated on dev and test.
struct SweepSpec {
  std::vector<double> lambdas;
  EncoderConfig encoder;
  TrainConfig train;  // lambda field is overridden per run
};

struct SweepRow {
  double lambda = 0.0;
  LatencyReport dev, test;
  TrainLog log;
};

std::vector<SweepRow> RunSweep(const Dataset &train_set, const Dataset &dev_set,
                               const Dataset &test_set, const SweepSpec &spec);

// CSV table, one row per lambda in sweep order. Delta columns compare
// against the lambda=0 baseline and are empty when no baseline was swept.
std::string SweepCsv(const std::vector<SweepRow> &rows);

}  // namespace peakctc

#endif  // PEAKCTC_SWEEP_HPP_
