// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef PEAKCTC_TRAINER_HPP_
#define PEAKCTC_TRAINER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "peakctc/encoder.hpp"
#include "peakctc/metrics.hpp"
#include "peakctc/pfr.hpp"
#include "peakctc/synthdata.hpp"

namespace peakctc {

struct TrainConfig {
  double lambda = 0.0;
  double tau = 10.0;
  bool detach_teacher = true;
  std::size_t epochs = 40;
  std::size_t batch_size = 8;
  double base_lr = 1.0;
  std::size_t warmup_steps = 400;
  std::uint64_t seed = 1;
  std::size_t average_last_k = 5;
  std::size_t eval_every = 0;  // 0 = no mid-training eval

  PfrConfig pfr() const { return {lambda, tau, detach_teacher}; }
};

struct OptimizerState {
  std::vector<Matrix> m, v;  // first/second moments, one per parameter tensor
  std::size_t step = 0;
};

struct Checkpoint {
  static constexpr int kVersion = 1;
  EncoderParams params;
  TrainConfig train_config;
  std::size_t epoch = 0;
  double final_ctc = 0.0, final_pfr = 0.0;
};

struct StepRecord {
  std::size_t epoch = 0, step = 0;
  double lr = 0.0, ctc = 0.0, pfr = 0.0, total = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_ctc = 0.0, mean_pfr = 0.0, lr = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;

  std::string StepsCsv() const;  // epoch,step,lr,ctc_loss,pfr_loss,total
};

class TrainError : public std::runtime_error {
 public:
  explicit TrainError(const std::string &msg) : std::runtime_error(msg) {}
};

// Inverse-square-root schedule with linear warmup:
// base_lr * min(step^-0.5, step * warmup^-1.5). step >= 1.
double LrAtStep(double base_lr, std::size_t warmup_steps, std::size_t step);

// One Adam update in place. beta1=0.9, beta2=0.98, eps=1e-9 with bias
// correction. Non-finite gradients abort, naming the parameter block.
void AdamStep(EncoderParams &params, const EncoderGrads &grads,
              OptimizerState &state, double lr);

// Per-utterance joint loss gradients accumulated over a batch in fixed
// utterance order. The OpenMP path computes per-utterance gradients into
// private slots and reduces serially, so serial and parallel results are
// bitwise identical. Returns mean (ctc, pfr) over the batch.
std::pair<double, double> BatchGradients(
    const EncoderParams &params, const std::vector<const Utterance *> &batch,
    const PfrConfig &pfr, EncoderGrads &grads_out, bool parallel = true);

// Full training loop: seeded shuffling, per-batch Adam steps, per-epoch
// checkpoints, final model = elementwise mean of the last average_last_k
// epoch snapshots.
Checkpoint Train(const Dataset &dataset, const EncoderConfig &encoder_config,
                 const TrainConfig &train_config, TrainLog *log = nullptr);

// Forward + greedy decode + full latency report, deterministic.
LatencyReport Evaluate(const Checkpoint &checkpoint, const Dataset &dataset,
                       bool parallel = true);

// Decode a single utterance's posterior lattice under a checkpoint.
ProbLattice Posteriors(const EncoderParams &params, const Utterance &utt);

// Versioned single-file JSON checkpoint; round trips are value-exact.
void SaveCheckpoint(const Checkpoint &checkpoint, const std::string &path);
Checkpoint LoadCheckpoint(const std::string &path);

// Elementwise mean of parameter sets (all must share one config).
EncoderParams AverageParams(const std::vector<EncoderParams> &snapshots);

// metrics CSV row: model_id,lambda,tau,lookahead_frames,cer,apl_ms,
// pr50_ms,pr90_ms,matched_tokens,utterances
std::string MetricsCsvHeader();
std::string MetricsCsvRow(const std::string &model_id, double lambda, double tau,
                          std::size_t lookahead_frames,
                          const LatencyReport &report);

}  // namespace peakctc

#endif  // PEAKCTC_TRAINER_HPP_
