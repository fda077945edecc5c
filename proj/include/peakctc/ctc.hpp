// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef PEAKCTC_CTC_HPP_
#define PEAKCTC_CTC_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakctc/matrix.hpp"

namespace peakctc {

// Blank token id. Labels use ids in [1, V-1].
constexpr int kBlankId = 0;

using LabelSeq = std::vector<int>;

// Label sequence with blanks interleaved and appended at both ends;
// length 2U+1, even positions blank.
using ExtendedLabel = std::vector<int>;

// Per-frame posterior distributions, T x V, rows sum to 1.
struct ProbLattice {
  Matrix probs;
  double frame_ms = 40.0;

  std::size_t num_frames() const { return probs.rows(); }
  std::size_t vocab_size() const { return probs.cols(); }
};

// Raised when the label sequence cannot be aligned into T frames.
// Training code must filter such utterances or fail loudly; a silent +inf
// loss would poison gradient averages.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::size_t num_frames, std::size_t min_frames)
      : std::runtime_error("CTC infeasible: T=" + std::to_string(num_frames) +
                           " frames, need at least " +
                           std::to_string(min_frames)),
        num_frames_(num_frames),
        min_frames_(min_frames) {}

  std::size_t num_frames() const { return num_frames_; }
  std::size_t min_frames() const { return min_frames_; }

 private:
  std::size_t num_frames_, min_frames_;
};

// Minimum number of frames that admits at least one alignment path:
// U plus one extra frame per adjacent equal label pair.
std::size_t MinFeasibleFrames(const LabelSeq &labels);

// Interleave blanks: [a, b] -> [phi, a, phi, b, phi]. Labels containing
// the blank id are a usage error.
ExtendedLabel ExtendLabels(const LabelSeq &labels);

// Forward DP over the extended label lattice, log domain. Row 0 is nonzero
// only at positions 0 and 1; the -2 transition is taken only when the
// target position holds a non-blank that differs from the one two back.
Matrix ForwardAlphas(const ProbLattice &lattice, const ExtendedLabel &ext);

// Backward DP, mirror image of ForwardAlphas. Final row is identity
// (log 0.0) at the last two positions; beta(t,u) excludes the emission at
// (t,u), so sum_u alpha(t,u)+beta(t,u) recovers the total at every t.
Matrix BackwardBetas(const ProbLattice &lattice, const ExtendedLabel &ext);

// -ln sum over all alignment paths collapsing to labels.
double CtcNegLogLikelihood(const ProbLattice &lattice, const LabelSeq &labels);

// Alignment posterior G(t,k): probability mass of token k at frame t under
// the path distribution. Linear domain, T x V, rows sum to 1.
Matrix Occupancy(const Matrix &alpha, const Matrix &beta,
                 const ExtendedLabel &ext, std::size_t vocab_size,
                 double total_nll);

// dL/dp(t,k) = -G(t,k) / p(t,k). Exposed for gradient verification;
// training consumes the logit-space form.
Matrix CtcGradWrtProbs(const Matrix &occupancy, const ProbLattice &lattice);

// dL/do(t,k) = p(t,k) - G(t,k), valid when probs = softmax(logits) at
// temperature 1. Rows sum to 0.
Matrix CtcGradWrtLogits(const Matrix &occupancy, const ProbLattice &probs);

// Enumeration oracle: sums P(pi|x) over every length-T token sequence that
// collapses to labels. Only for tiny instances (T <= 8, V <= 5); larger
// inputs are a usage error. A zero path sum is reported as infeasible.
double BruteForceLikelihood(const ProbLattice &lattice, const LabelSeq &labels);

}  // namespace peakctc

#endif  // PEAKCTC_CTC_HPP_
