// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef PEAKCTC_PFR_HPP_
#define PEAKCTC_PFR_HPP_

#include "peakctc/ctc.hpp"
#include "peakctc/matrix.hpp"

namespace peakctc {

// Peak-first regularization settings. lambda weights the regularizer in
// the joint objective; tau tempers the distributions it compares;
// detach_teacher treats the next frame as a constant target so the
// regularization gradient flows only into the current frame.
struct PfrConfig {
  double lambda = 0.0;
  double tau = 10.0;
  bool detach_teacher = true;
};

// Frame-wise KL of each tempered row toward its right neighbor:
// sum_{t<T-1} KL(q^{t+1} || q^t) with q = softmax(logits / tau).
// Non-negative; zero for T=1 and for constant lattices.
double PfrLoss(const Matrix &logits, const PfrConfig &config);

// Closed-form gradient of PfrLoss w.r.t. the tempered probabilities with
// the teacher frozen: row t holds -q^{t+1}_k / q^t_k, final row zero.
// Only valid with detach_teacher=true; otherwise use the logit-space path.
Matrix PfrGradWrtProbs(const Matrix &tempered_probs, const PfrConfig &config);

struct JointLoss {
  double total = 0.0;
  double ctc = 0.0;
  double pfr = 0.0;
};

// L = L_ctc + lambda * L_pfr. The CTC term always sees the temperature-1
// softmax; only the regularizer is tempered.
JointLoss ComputeJointLoss(const Matrix &logits, const LabelSeq &labels,
                           const PfrConfig &config, double frame_ms = 40.0);

// Gradient of the joint loss w.r.t. the logits. When lambda is exactly 0
// the regularizer is skipped entirely and the result is bitwise identical
// to the pure CTC logit gradient.
Matrix JointGradWrtLogits(const Matrix &logits, const LabelSeq &labels,
                          const PfrConfig &config);

// Regularizer-only gradient w.r.t. the logits (unweighted by lambda);
// handles both detach settings via the tempered softmax chain rule.
Matrix PfrGradWrtLogits(const Matrix &logits, const PfrConfig &config);

}  // namespace peakctc

#endif  // PEAKCTC_PFR_HPP_
