// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "peakctc/pfr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "peakctc/numerics.hpp"

namespace peakctc {

namespace {

// Floor applied before the log ratio; softmax of finite logits never
// reaches 0 in double precision, this only guards constructed inputs.
constexpr double kProbFloor = 1e-30;

}  // namespace

double PfrLoss(const Matrix &logits, const PfrConfig &config) {
  const std::size_t T = logits.rows();
  if (T < 1) throw std::invalid_argument("PfrLoss: need at least one frame");
  if (T == 1) return 0.0;
  Matrix q = TemperedSoftmaxRows(logits, config.tau);
  double loss = 0.0;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (std::size_t k = 0; k < q.cols(); ++k) {
      double teacher = std::max(q(t + 1, k), kProbFloor);
      double student = std::max(q(t, k), kProbFloor);
      loss += teacher * std::log(teacher / student);
    }
  }
  return loss;
}

Matrix PfrGradWrtProbs(const Matrix &tempered_probs, const PfrConfig &config) {
  if (!config.detach_teacher)
    throw std::invalid_argument(
        "PfrGradWrtProbs: closed form requires detach_teacher; use the logit path");
  const std::size_t T = tempered_probs.rows();
  Matrix grad(T, tempered_probs.cols(), 0.0);
  for (std::size_t t = 0; t + 1 < T; ++t)
    for (std::size_t k = 0; k < tempered_probs.cols(); ++k)
      grad(t, k) = -tempered_probs(t + 1, k) /
                   std::max(tempered_probs(t, k), kProbFloor);
  return grad;
}

Matrix PfrGradWrtLogits(const Matrix &logits, const PfrConfig &config) {
  const std::size_t T = logits.rows();
  const std::size_t V = logits.cols();
  Matrix q = TemperedSoftmaxRows(logits, config.tau);

  // Gradient w.r.t. the tempered probabilities, then chained through the
  // tempered softmax (the 1/tau factor comes from the logits/tau input;
  // no extra tau^2 compensation).
  Matrix dq(T, V, 0.0);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (std::size_t k = 0; k < V; ++k) {
      double teacher = std::max(q(t + 1, k), kProbFloor);
      double student = std::max(q(t, k), kProbFloor);
      dq(t, k) += -teacher / student;
      if (!config.detach_teacher)
        dq(t + 1, k) += std::log(teacher / student) + 1.0;
    }
  }

  Matrix grad(T, V, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double dot = 0.0;
    for (std::size_t k = 0; k < V; ++k) dot += dq(t, k) * q(t, k);
    for (std::size_t k = 0; k < V; ++k)
      grad(t, k) = q(t, k) * (dq(t, k) - dot) / config.tau;
  }
  return grad;
}

JointLoss ComputeJointLoss(const Matrix &logits, const LabelSeq &labels,
                           const PfrConfig &config, double frame_ms) {
  ProbLattice lattice{TemperedSoftmaxRows(logits, 1.0), frame_ms};
  JointLoss out;
  out.ctc = CtcNegLogLikelihood(lattice, labels);
  out.pfr = PfrLoss(logits, config);
  out.total = out.ctc + config.lambda * out.pfr;
  return out;
}

Matrix JointGradWrtLogits(const Matrix &logits, const LabelSeq &labels,
                          const PfrConfig &config) {
  ProbLattice lattice{TemperedSoftmaxRows(logits, 1.0), 40.0};
  ExtendedLabel ext = ExtendLabels(labels);
  Matrix alpha = ForwardAlphas(lattice, ext);
  Matrix beta = BackwardBetas(lattice, ext);
  const std::size_t T = lattice.num_frames();
  const std::size_t S = ext.size();
  double log_p = LogSumExp2(alpha(T - 1, S - 1),
                            S > 1 ? alpha(T - 1, S - 2) : kLogZero);
  Matrix occ = Occupancy(alpha, beta, ext, lattice.vocab_size(), -log_p);
  Matrix grad = CtcGradWrtLogits(occ, lattice);
  if (config.lambda != 0.0) {
    Matrix reg = PfrGradWrtLogits(logits, config);
    for (std::size_t i = 0; i < grad.size(); ++i)
      grad.data()[i] += config.lambda * reg.data()[i];
  }
  return grad;
}

}  // namespace peakctc
