// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef PEAKCTC_ENCODER_HPP_
#define PEAKCTC_ENCODER_HPP_

#include <cstdint>
#include <vector>

#include "peakctc/matrix.hpp"

namespace peakctc {

// Windowed feed-forward acoustic encoder. Frame t reads feature rows
// [t-left_context, t+right_context] (zero padded at the edges), so the
// receptive field is exact and right_context directly bounds how much
// future audio the model sees. Stride 1, no subsampling.
struct EncoderConfig {
  std::size_t feature_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t vocab_size = 8;
  std::size_t left_context = 5;
  std::size_t right_context = 2;
  std::size_t layers = 1;  // 1 or 2

  std::size_t window() const { return left_context + 1 + right_context; }
};

// Only the first layer is windowed; the optional second layer and the
// output projection are per-frame, keeping the receptive field at exactly
// [t-L, t+R].
struct EncoderParams {
  EncoderConfig config;
  Matrix w1;  // hidden_dim x (window * feature_dim)
  Matrix b1;  // 1 x hidden_dim
  Matrix w2;  // hidden_dim x hidden_dim (layers == 2 only)
  Matrix b2;  // 1 x hidden_dim
  Matrix wo;  // vocab_size x hidden_dim
  Matrix bo;  // 1 x vocab_size

  // Uniform access for the optimizer and parameter averaging.
  std::vector<Matrix *> tensors();
  std::vector<const Matrix *> tensors() const;
  static const char *tensor_name(std::size_t index);
};

// Gradients mirror the parameter shapes.
using EncoderGrads = EncoderParams;

struct ForwardCache {
  Matrix windowed;  // T x (window * feature_dim)
  Matrix z1, a1;    // pre-activation / activation of layer 1
  Matrix z2, a2;    // layer 2, empty when layers == 1
};

// Seeded init: weights ~ N(0, 1/fan_in), biases zero. Deterministic.
EncoderParams InitParams(const EncoderConfig &config, std::uint64_t seed);

// Zero-valued gradient holder with shapes matching config.
EncoderParams ZeroParams(const EncoderConfig &config);

// Maps a T x feature_dim utterance to T x vocab_size logits, keeping the
// intermediates needed for backprop.
Matrix EncoderForward(const EncoderParams &params, const Matrix &features,
                      ForwardCache *cache);

// Backprop from a logit-space gradient to parameter gradients. The cache
// must come from the matching forward call.
EncoderGrads EncoderBackward(const EncoderParams &params,
                             const ForwardCache &cache, const Matrix &dlogits);

// Exact GELU and its derivative (erf form).
double Gelu(double x);
double GeluDerivative(double x);

}  // namespace peakctc

#endif  // PEAKCTC_ENCODER_HPP_
