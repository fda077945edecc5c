// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef PEAKCTC_METRICS_HPP_
#define PEAKCTC_METRICS_HPP_

#include <stdexcept>
#include <vector>

#include "peakctc/ctc.hpp"
#include "peakctc/synthdata.hpp"

namespace peakctc {

// Emission record from greedy decoding: one peak per surviving token run.
struct PeakEvent {
  int token = 0;
  std::size_t emit_frame = 0;
  double posterior = 0.0;
};

struct DecodeResult {
  LabelSeq tokens;
  std::vector<PeakEvent> peaks;
};

struct LatencyReport {
  double apl_ms = 0.0;
  double pr50_ms = 0.0;
  double pr90_ms = 0.0;
  double cer = 0.0;
  std::size_t matched_token_count = 0;
  std::size_t utterance_count = 0;
};

// Raised when a metric has no defined value (e.g. zero matched pairs).
class UndefinedMetricError : public std::runtime_error {
 public:
  explicit UndefinedMetricError(const std::string &msg)
      : std::runtime_error(msg) {}
};

// Which frame of an argmax run counts as the emission time.
enum class PeakMode { kMaxPosterior, kFirstFrame };

// Per-frame argmax, collapse consecutive repeats, drop blanks. Each
// surviving run contributes one peak.
DecodeResult GreedyDecode(const ProbLattice &lattice,
                          PeakMode mode = PeakMode::kMaxPosterior);

// Unit-cost Levenshtein distance.
std::size_t EditDistance(const LabelSeq &a, const LabelSeq &b);

// Per-utterance character error rate; reference must be non-empty.
double Cer(const LabelSeq &hypothesis, const LabelSeq &reference);

// (hyp index, ref index) pairs where the aligned tokens are equal, from a
// minimal edit-distance alignment. Only exact matches are returned.
std::vector<std::pair<std::size_t, std::size_t>> MatchedPairs(
    const LabelSeq &hypothesis, const LabelSeq &reference);

// Mean over all matched token pairs of
// (peak emission time - ground-truth token end time), in ms, using the
// frame-end convention (index+1)*frame_ms on both sides. Negative means
// early emission. Zero matched pairs is an undefined-metric error.
std::pair<double, std::size_t> AveragePeakLatency(
    const std::vector<DecodeResult> &results,
    const std::vector<const Utterance *> &references);

// Per utterance with a non-empty decode: (last peak frame - speech end
// frame) * frame_ms. Utterances with empty decodes are skipped (count
// reported via skipped); all-empty is an undefined-metric error.
std::vector<double> PartialRecognitionLatencies(
    const std::vector<DecodeResult> &results,
    const std::vector<const Utterance *> &references,
    std::size_t *skipped = nullptr);

// Full report over a decoded dataset. CER is micro-averaged: total edits
// over total reference length.
LatencyReport BuildLatencyReport(const std::vector<DecodeResult> &results,
                                 const std::vector<const Utterance *> &references);

}  // namespace peakctc

#endif  // PEAKCTC_METRICS_HPP_
