// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "peakctc/metrics.hpp"

#include <algorithm>

#include "peakctc/numerics.hpp"

namespace peakctc {

DecodeResult GreedyDecode(const ProbLattice &lattice, PeakMode mode) {
  const std::size_t T = lattice.num_frames();
  const std::size_t V = lattice.vocab_size();
  DecodeResult result;
  int prev = -1;
  for (std::size_t t = 0; t < T; ++t) {
    int best = 0;
    double best_p = lattice.probs(t, 0);
    for (std::size_t k = 1; k < V; ++k) {
      if (lattice.probs(t, k) > best_p) {
        best = static_cast<int>(k);
        best_p = lattice.probs(t, k);
      }
    }
    if (best != kBlankId) {
      if (best != prev) {
        result.tokens.push_back(best);
        result.peaks.push_back({best, t, best_p});
      } else if (mode == PeakMode::kMaxPosterior &&
                 best_p > result.peaks.back().posterior) {
        result.peaks.back().emit_frame = t;
        result.peaks.back().posterior = best_p;
      }
    }
    prev = best;
  }
  return result;
}

std::size_t EditDistance(const LabelSeq &a, const LabelSeq &b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double Cer(const LabelSeq &hypothesis, const LabelSeq &reference) {
  if (reference.empty())
    throw std::invalid_argument("Cer: reference must be non-empty");
  return static_cast<double>(EditDistance(hypothesis, reference)) /
         static_cast<double>(reference.size());
}

std::vector<std::pair<std::size_t, std::size_t>> MatchedPairs(
    const LabelSeq &hypothesis, const LabelSeq &reference) {
  const std::size_t n = hypothesis.size(), m = reference.size();
  Matrix d(n + 1, m + 1);
  for (std::size_t i = 0; i <= n; ++i) d(i, 0) = static_cast<double>(i);
  for (std::size_t j = 0; j <= m; ++j) d(0, j) = static_cast<double>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      d(i, j) = std::min(
          {d(i - 1, j - 1) + (hypothesis[i - 1] == reference[j - 1] ? 0 : 1),
           d(i - 1, j) + 1, d(i, j - 1) + 1});

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    double sub_cost = hypothesis[i - 1] == reference[j - 1] ? 0 : 1;
    if (d(i, j) == d(i - 1, j - 1) + sub_cost) {
      if (sub_cost == 0) pairs.emplace_back(i - 1, j - 1);
      --i;
      --j;
    } else if (d(i, j) == d(i - 1, j) + 1) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(pairs.begin(), pairs.end());
  return pairs;
}

std::pair<double, std::size_t> AveragePeakLatency(
    const std::vector<DecodeResult> &results,
    const std::vector<const Utterance *> &references) {
  if (results.size() != references.size())
    throw std::invalid_argument("AveragePeakLatency: size mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t u = 0; u < results.size(); ++u) {
    const Utterance &ref = *references[u];
    for (auto [hi, ri] : MatchedPairs(results[u].tokens, ref.labels)) {
      double emit = static_cast<double>(results[u].peaks[hi].emit_frame + 1);
      double end = static_cast<double>(ref.label_end_frames[ri] + 1);
      sum += (emit - end) * ref.frame_ms;
      ++count;
    }
  }
  if (count == 0)
    throw UndefinedMetricError("AveragePeakLatency: no matched token pairs");
  return {sum / static_cast<double>(count), count};
}

std::vector<double> PartialRecognitionLatencies(
    const std::vector<DecodeResult> &results,
    const std::vector<const Utterance *> &references, std::size_t *skipped) {
  if (results.size() != references.size())
    throw std::invalid_argument("PartialRecognitionLatencies: size mismatch");
  std::vector<double> latencies;
  std::size_t skip_count = 0;
  for (std::size_t u = 0; u < results.size(); ++u) {
    if (results[u].peaks.empty()) {
      ++skip_count;
      continue;
    }
    const Utterance &ref = *references[u];
    double last = static_cast<double>(results[u].peaks.back().emit_frame + 1);
    double end = static_cast<double>(ref.speech_end_frame + 1);
    latencies.push_back((last - end) * ref.frame_ms);
  }
  if (skipped) *skipped = skip_count;
  if (latencies.empty())
    throw UndefinedMetricError("PartialRecognitionLatencies: every decode is empty");
  return latencies;
}

LatencyReport BuildLatencyReport(
    const std::vector<DecodeResult> &results,
    const std::vector<const Utterance *> &references) {
  LatencyReport report;
  report.utterance_count = results.size();
  auto [apl, matched] = AveragePeakLatency(results, references);
  report.apl_ms = apl;
  report.matched_token_count = matched;
  std::vector<double> pr = PartialRecognitionLatencies(results, references);
  report.pr50_ms = NearestRankPercentile(pr, 50.0);
  report.pr90_ms = NearestRankPercentile(pr, 90.0);
  std::size_t edits = 0, ref_len = 0;
  for (std::size_t u = 0; u < results.size(); ++u) {
    edits += EditDistance(results[u].tokens, references[u]->labels);
    ref_len += references[u]->labels.size();
  }
  report.cer = ref_len > 0 ? static_cast<double>(edits) / static_cast<double>(ref_len)
                           : 0.0;
  return report;
}

}  // namespace peakctc
