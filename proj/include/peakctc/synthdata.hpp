// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef PEAKCTC_SYNTHDATA_HPP_
#define PEAKCTC_SYNTHDATA_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakctc/ctc.hpp"
#include "peakctc/matrix.hpp"

namespace peakctc {

// Synthetic corpus settings. Features are token prototype vectors plus
// Gaussian noise; silence has its own prototype so the blank class has
// learnable evidence. Replaces a real corpus and forced aligner with
// exactly known alignments.
struct SynthConfig {
  std::size_t vocab_size = 8;  // blank + vocab_size-1 tokens
  // Prototypes are drawn from their own stream so train/dev/test splits
  // generated with different utterance seeds still share one token->feature
  // mapping; otherwise cross-split evaluation would be meaningless.
  std::uint64_t prototype_seed = 1;
  std::size_t utterance_count = 100;
  std::size_t min_tokens = 3, max_tokens = 6;
  std::size_t min_frames_per_token = 5, max_frames_per_token = 10;
  std::size_t min_silence_frames = 2, max_silence_frames = 6;
  std::size_t feature_dim = 16;
  double noise_std = 0.3;
  double frame_ms = 40.0;
};

struct Utterance {
  std::string id;
  Matrix features;  // T x feature_dim
  LabelSeq labels;
  std::vector<std::size_t> label_end_frames;  // last frame of each token span
  std::size_t speech_end_frame = 0;
  double frame_ms = 40.0;
};

struct Dataset {
  std::vector<Utterance> utterances;
  SynthConfig config;
  std::uint64_t seed = 0;
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

// Deterministic given (config, seed): one generator stream, single thread.
Dataset GenerateDataset(const SynthConfig &config, std::uint64_t seed);

// One utterance per line; field names are part of the on-disk contract:
// id, frame_ms, features, labels, label_end_frames, speech_end_frame.
// Round trips are value-exact.
void WriteJsonl(const Dataset &dataset, const std::string &path);
Dataset ReadJsonl(const std::string &path);

}  // namespace peakctc

#endif  // PEAKCTC_SYNTHDATA_HPP_
