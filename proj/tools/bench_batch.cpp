// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Benchmarks the OpenMP batch-gradient and evaluation paths against the
// serial reference and checks that they agree bitwise.

#include <chrono>
#include <cstdio>
#include <iostream>

#include "peakctc/trainer.hpp"

using namespace peakctc;
using Clock = std::chrono::steady_clock;

namespace {

double Seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

bool SameGrads(const EncoderGrads &a, const EncoderGrads &b) {
  auto ta = a.tensors(), tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (!(*ta[i] == *tb[i])) return false;
  return true;
}

}  // namespace

int main(int argc, char **argv) {
  std::size_t utts = 256, repeats = 5;
  if (argc > 1) utts = std::stoul(argv[1]);
  if (argc > 2) repeats = std::stoul(argv[2]);

  SynthConfig data_cfg;
  data_cfg.utterance_count = utts;
  Dataset dataset = GenerateDataset(data_cfg, 4242);

  EncoderConfig enc_cfg;
  enc_cfg.feature_dim = data_cfg.feature_dim;
  enc_cfg.vocab_size = data_cfg.vocab_size;
  EncoderParams params = InitParams(enc_cfg, 7);

  std::vector<const Utterance *> batch;
  for (const Utterance &utt : dataset.utterances) batch.push_back(&utt);
  PfrConfig pfr{0.5, 10.0, true};

  std::printf("batch gradients over %zu utterances, %zu repeats\n", utts,
              repeats);
  EncoderGrads serial_grads = ZeroParams(enc_cfg);
  EncoderGrads parallel_grads = ZeroParams(enc_cfg);
  double serial_s = 0.0, parallel_s = 0.0;
  for (std::size_t r = 0; r < repeats; ++r) {
    auto t0 = Clock::now();
    BatchGradients(params, batch, pfr, serial_grads, /*parallel=*/false);
    auto t1 = Clock::now();
    BatchGradients(params, batch, pfr, parallel_grads, /*parallel=*/true);
    auto t2 = Clock::now();
    serial_s += Seconds(t0, t1);
    parallel_s += Seconds(t1, t2);
  }
  bool grads_match = SameGrads(serial_grads, parallel_grads);
  std::printf("  serial:   %.3f s/iter\n", serial_s / repeats);
  std::printf("  parallel: %.3f s/iter (speedup %.2fx)\n", parallel_s / repeats,
              serial_s / parallel_s);
  std::printf("  bitwise match: %s\n", grads_match ? "yes" : "NO");

  Checkpoint ckpt;
  ckpt.params = params;
  auto t0 = Clock::now();
  LatencyReport serial_report = Evaluate(ckpt, dataset, /*parallel=*/false);
  auto t1 = Clock::now();
  LatencyReport parallel_report = Evaluate(ckpt, dataset, /*parallel=*/true);
  auto t2 = Clock::now();
  bool eval_match = serial_report.cer == parallel_report.cer &&
                    serial_report.apl_ms == parallel_report.apl_ms &&
                    serial_report.pr50_ms == parallel_report.pr50_ms &&
                    serial_report.pr90_ms == parallel_report.pr90_ms;
  std::printf("evaluation over %zu utterances\n", utts);
  std::printf("  serial:   %.3f s\n", Seconds(t0, t1));
  std::printf("  parallel: %.3f s (speedup %.2fx)\n", Seconds(t1, t2),
              Seconds(t0, t1) / Seconds(t1, t2));
  std::printf("  bitwise match: %s\n", eval_match ? "yes" : "NO");

  if (!grads_match || !eval_match) {
    std::cerr << "serial/parallel mismatch\n";
    return 1;
  }
  return 0;
}
