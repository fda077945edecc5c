// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "peakctc/ctc.hpp"

#include <cmath>
#include <stdexcept>

#include "peakctc/numerics.hpp"

namespace peakctc {

std::size_t MinFeasibleFrames(const LabelSeq &labels) {
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++repeats;
  return labels.size() + repeats;
}

ExtendedLabel ExtendLabels(const LabelSeq &labels) {
  ExtendedLabel ext;
  ext.reserve(2 * labels.size() + 1);
  ext.push_back(kBlankId);
  for (int tok : labels) {
    if (tok == kBlankId)
      throw std::invalid_argument("ExtendLabels: labels may not contain the blank id");
    ext.push_back(tok);
    ext.push_back(kBlankId);
  }
  return ext;
}

namespace {

void CheckFeasible(const ProbLattice &lattice, const ExtendedLabel &ext) {
  LabelSeq labels;
  for (std::size_t u = 1; u < ext.size(); u += 2) labels.push_back(ext[u]);
  std::size_t min_t = MinFeasibleFrames(labels);
  if (min_t == 0) min_t = 1;  // even an empty label needs one blank frame
  if (lattice.num_frames() < min_t)
    throw InfeasibleError(lattice.num_frames(), min_t);
  for (int tok : ext)
    if (tok < 0 || static_cast<std::size_t>(tok) >= lattice.vocab_size())
      throw std::invalid_argument("CTC: token id out of vocabulary range");
}

// The -2 skip exists only when the target holds a non-blank differing from
// the label two positions back; it never exists for u < 2.
inline bool SkipAllowed(const ExtendedLabel &ext, std::size_t u) {
  return u >= 2 && ext[u] != kBlankId && ext[u] != ext[u - 2];
}

}  // namespace

Matrix ForwardAlphas(const ProbLattice &lattice, const ExtendedLabel &ext) {
  CheckFeasible(lattice, ext);
  const std::size_t T = lattice.num_frames();
  const std::size_t S = ext.size();
  Matrix alpha(T, S, kLogZero);
  alpha(0, 0) = std::log(lattice.probs(0, ext[0]));
  if (S > 1) alpha(0, 1) = std::log(lattice.probs(0, ext[1]));
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t u = 0; u < S; ++u) {
      double stay = alpha(t - 1, u);
      double step = u >= 1 ? alpha(t - 1, u - 1) : kLogZero;
      double skip = SkipAllowed(ext, u) ? alpha(t - 1, u - 2) : kLogZero;
      double in = LogSumExp3(stay, step, skip);
      alpha(t, u) = in == kLogZero ? kLogZero
                                   : in + std::log(lattice.probs(t, ext[u]));
    }
  }
  return alpha;
}

Matrix BackwardBetas(const ProbLattice &lattice, const ExtendedLabel &ext) {
  CheckFeasible(lattice, ext);
  const std::size_t T = lattice.num_frames();
  const std::size_t S = ext.size();
  Matrix beta(T, S, kLogZero);
  beta(T - 1, S - 1) = 0.0;
  if (S > 1) beta(T - 1, S - 2) = 0.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t u = 0; u < S; ++u) {
      double stay = beta(t + 1, u) == kLogZero
                        ? kLogZero
                        : beta(t + 1, u) + std::log(lattice.probs(t + 1, ext[u]));
      double step = kLogZero;
      if (u + 1 < S && beta(t + 1, u + 1) != kLogZero)
        step = beta(t + 1, u + 1) + std::log(lattice.probs(t + 1, ext[u + 1]));
      double skip = kLogZero;
      if (u + 2 < S && SkipAllowed(ext, u + 2) && beta(t + 1, u + 2) != kLogZero)
        skip = beta(t + 1, u + 2) + std::log(lattice.probs(t + 1, ext[u + 2]));
      beta(t, u) = LogSumExp3(stay, step, skip);
    }
  }
  return beta;
}

double CtcNegLogLikelihood(const ProbLattice &lattice, const LabelSeq &labels) {
  ExtendedLabel ext = ExtendLabels(labels);
  Matrix alpha = ForwardAlphas(lattice, ext);
  const std::size_t T = lattice.num_frames();
  const std::size_t S = ext.size();
  double last = alpha(T - 1, S - 1);
  double second = S > 1 ? alpha(T - 1, S - 2) : kLogZero;
  double log_p = LogSumExp2(last, second);
  if (log_p == kLogZero)
    throw InfeasibleError(T, MinFeasibleFrames(labels));
  return -log_p;
}

Matrix Occupancy(const Matrix &alpha, const Matrix &beta,
                 const ExtendedLabel &ext, std::size_t vocab_size,
                 double total_nll) {
  if (!alpha.same_shape(beta) || alpha.cols() != ext.size())
    throw std::invalid_argument("Occupancy: alpha/beta/ext shape mismatch");
  const std::size_t T = alpha.rows();
  Matrix occ(T, vocab_size, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < ext.size(); ++u) {
      double lp = alpha(t, u) + beta(t, u);
      if (lp == kLogZero) continue;
      occ(t, ext[u]) += std::exp(lp + total_nll);
    }
  }
  return occ;
}

Matrix CtcGradWrtProbs(const Matrix &occupancy, const ProbLattice &lattice) {
  Matrix grad(occupancy.rows(), occupancy.cols());
  for (std::size_t t = 0; t < occupancy.rows(); ++t)
    for (std::size_t k = 0; k < occupancy.cols(); ++k)
      grad(t, k) = occupancy(t, k) == 0.0
                       ? 0.0
                       : -occupancy(t, k) / lattice.probs(t, k);
  return grad;
}

Matrix CtcGradWrtLogits(const Matrix &occupancy, const ProbLattice &probs) {
  Matrix grad(occupancy.rows(), occupancy.cols());
  for (std::size_t t = 0; t < occupancy.rows(); ++t)
    for (std::size_t k = 0; k < occupancy.cols(); ++k)
      grad(t, k) = probs.probs(t, k) - occupancy(t, k);
  return grad;
}

namespace {

// Remove consecutive repeats, then blanks.
LabelSeq Collapse(const std::vector<int> &path) {
  LabelSeq out;
  int prev = -1;
  for (int tok : path) {
    if (tok != prev && tok != kBlankId) out.push_back(tok);
    prev = tok;
  }
  return out;
}

}  // namespace

double BruteForceLikelihood(const ProbLattice &lattice, const LabelSeq &labels) {
  const std::size_t T = lattice.num_frames();
  const std::size_t V = lattice.vocab_size();
  if (T > 8 || V > 5)
    throw std::invalid_argument("BruteForceLikelihood: instance too large (T <= 8, V <= 5)");
  std::vector<int> path(T, 0);
  double total = 0.0;
  while (true) {
    if (Collapse(path) == labels) {
      double p = 1.0;
      for (std::size_t t = 0; t < T; ++t) p *= lattice.probs(t, path[t]);
      total += p;
    }
    // odometer over the V^T path space
    std::size_t pos = 0;
    while (pos < T && ++path[pos] == static_cast<int>(V)) path[pos++] = 0;
    if (pos == T) break;
  }
  if (total <= 0.0)
    throw InfeasibleError(T, MinFeasibleFrames(labels));
  return -std::log(total);
}

}  // namespace peakctc
