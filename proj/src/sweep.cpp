// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "peakctc/sweep.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace peakctc {

namespace {

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<SweepRow> RunSweep(const Dataset &train_set, const Dataset &dev_set,
                               const Dataset &test_set, const SweepSpec &spec) {
  if (spec.lambdas.empty())
    throw std::invalid_argument("RunSweep: need at least one lambda");
  std::vector<SweepRow> rows;
  for (double lambda : spec.lambdas) {
    TrainConfig cfg = spec.train;
    cfg.lambda = lambda;
    SweepRow row;
    row.lambda = lambda;
    Checkpoint ckpt = Train(train_set, spec.encoder, cfg, &row.log);
    row.dev = Evaluate(ckpt, dev_set);
    row.test = Evaluate(ckpt, test_set);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string SweepCsv(const std::vector<SweepRow> &rows) {
  const SweepRow *baseline = nullptr;
  for (const SweepRow &row : rows)
    if (row.lambda == 0.0) baseline = &row;

  std::ostringstream out;
  out << "lambda,dev_cer,dev_apl_ms,dev_pr50_ms,dev_pr90_ms,"
         "test_cer,test_apl_ms,test_pr50_ms,test_pr90_ms,"
         "dev_apl_delta_ms,test_apl_delta_ms\n";
  for (const SweepRow &row : rows) {
    out << Fmt(row.lambda) << "," << Fmt(row.dev.cer) << ","
        << Fmt(row.dev.apl_ms) << "," << Fmt(row.dev.pr50_ms) << ","
        << Fmt(row.dev.pr90_ms) << "," << Fmt(row.test.cer) << ","
        << Fmt(row.test.apl_ms) << "," << Fmt(row.test.pr50_ms) << ","
        << Fmt(row.test.pr90_ms) << ",";
    if (baseline) {
      out << Fmt(row.dev.apl_ms - baseline->dev.apl_ms) << ","
          << Fmt(row.test.apl_ms - baseline->test.apl_ms);
    } else {
      out << ",";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace peakctc
