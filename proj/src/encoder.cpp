// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "peakctc/encoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace peakctc {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

void FillGaussian(Matrix &m, std::mt19937_64 &rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double &v : m.data()) v = dist(rng);
}

// out = x * w^T + b, with x: T x in, w: out_dim x in, b: 1 x out_dim
Matrix AffineForward(const Matrix &x, const Matrix &w, const Matrix &b) {
  Matrix out(x.rows(), w.rows());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const double *xi = x.row_ptr(t);
    double *oi = out.row_ptr(t);
    for (std::size_t j = 0; j < w.rows(); ++j) {
      const double *wj = w.row_ptr(j);
      double acc = b(0, j);
      for (std::size_t k = 0; k < x.cols(); ++k) acc += xi[k] * wj[k];
      oi[j] = acc;
    }
  }
  return out;
}

// Accumulates dW = dout^T * x and db = colsum(dout); returns dx = dout * w.
Matrix AffineBackward(const Matrix &x, const Matrix &w, const Matrix &dout,
                      Matrix &dw, Matrix &db) {
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const double *xi = x.row_ptr(t);
    const double *di = dout.row_ptr(t);
    for (std::size_t j = 0; j < dout.cols(); ++j) {
      double d = di[j];
      db(0, j) += d;
      double *dwj = dw.row_ptr(j);
      for (std::size_t k = 0; k < x.cols(); ++k) dwj[k] += d * xi[k];
    }
  }
  Matrix dx(x.rows(), x.cols(), 0.0);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const double *di = dout.row_ptr(t);
    double *dxi = dx.row_ptr(t);
    for (std::size_t j = 0; j < dout.cols(); ++j) {
      const double *wj = w.row_ptr(j);
      double d = di[j];
      for (std::size_t k = 0; k < x.cols(); ++k) dxi[k] += d * wj[k];
    }
  }
  return dx;
}

Matrix BuildWindowed(const Matrix &features, const EncoderConfig &cfg) {
  const std::size_t T = features.rows();
  const std::size_t F = cfg.feature_dim;
  Matrix win(T, cfg.window() * F, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double *row = win.row_ptr(t);
    for (std::size_t o = 0; o < cfg.window(); ++o) {
      std::ptrdiff_t src =
          static_cast<std::ptrdiff_t>(t + o) -
          static_cast<std::ptrdiff_t>(cfg.left_context);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
      const double *f = features.row_ptr(static_cast<std::size_t>(src));
      for (std::size_t k = 0; k < F; ++k) row[o * F + k] = f[k];
    }
  }
  return win;
}

}  // namespace

double Gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double GeluDerivative(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

std::vector<Matrix *> EncoderParams::tensors() {
  if (config.layers == 2) return {&w1, &b1, &w2, &b2, &wo, &bo};
  return {&w1, &b1, &wo, &bo};
}

std::vector<const Matrix *> EncoderParams::tensors() const {
  if (config.layers == 2) return {&w1, &b1, &w2, &b2, &wo, &bo};
  return {&w1, &b1, &wo, &bo};
}

const char *EncoderParams::tensor_name(std::size_t index) {
  static const char *kNames2[] = {"w1", "b1", "w2", "b2", "wo", "bo"};
  return kNames2[index % 6];
}

EncoderParams ZeroParams(const EncoderConfig &config) {
  if (config.layers != 1 && config.layers != 2)
    throw std::invalid_argument("EncoderConfig: layers must be 1 or 2");
  if (config.vocab_size < 2)
    throw std::invalid_argument("EncoderConfig: vocab_size must be >= 2");
  EncoderParams p;
  p.config = config;
  std::size_t in1 = config.window() * config.feature_dim;
  p.w1 = Matrix(config.hidden_dim, in1);
  p.b1 = Matrix(1, config.hidden_dim);
  if (config.layers == 2) {
    p.w2 = Matrix(config.hidden_dim, config.hidden_dim);
    p.b2 = Matrix(1, config.hidden_dim);
  }
  p.wo = Matrix(config.vocab_size, config.hidden_dim);
  p.bo = Matrix(1, config.vocab_size);
  return p;
}

EncoderParams InitParams(const EncoderConfig &config, std::uint64_t seed) {
  EncoderParams p = ZeroParams(config);
  std::mt19937_64 rng(seed);
  FillGaussian(p.w1, rng, 1.0 / std::sqrt(static_cast<double>(p.w1.cols())));
  if (config.layers == 2)
    FillGaussian(p.w2, rng, 1.0 / std::sqrt(static_cast<double>(p.w2.cols())));
  FillGaussian(p.wo, rng, 1.0 / std::sqrt(static_cast<double>(p.wo.cols())));
  return p;
}

Matrix EncoderForward(const EncoderParams &params, const Matrix &features,
                      ForwardCache *cache) {
  const EncoderConfig &cfg = params.config;
  if (features.cols() != cfg.feature_dim)
    throw std::invalid_argument("EncoderForward: feature dimension mismatch");
  ForwardCache local;
  ForwardCache &c = cache ? *cache : local;
  c.windowed = BuildWindowed(features, cfg);
  c.z1 = AffineForward(c.windowed, params.w1, params.b1);
  c.a1 = c.z1;
  for (double &v : c.a1.data()) v = Gelu(v);
  const Matrix *last = &c.a1;
  if (cfg.layers == 2) {
    c.z2 = AffineForward(c.a1, params.w2, params.b2);
    c.a2 = c.z2;
    for (double &v : c.a2.data()) v = Gelu(v);
    last = &c.a2;
  }
  return AffineForward(*last, params.wo, params.bo);
}

EncoderGrads EncoderBackward(const EncoderParams &params,
                             const ForwardCache &cache, const Matrix &dlogits) {
  const EncoderConfig &cfg = params.config;
  if (dlogits.cols() != cfg.vocab_size || dlogits.rows() != cache.z1.rows())
    throw std::invalid_argument("EncoderBackward: dlogits shape mismatch");
  EncoderGrads g = ZeroParams(cfg);
  const Matrix &last = cfg.layers == 2 ? cache.a2 : cache.a1;
  Matrix da = AffineBackward(last, params.wo, dlogits, g.wo, g.bo);
  if (cfg.layers == 2) {
    Matrix dz2 = da;
    for (std::size_t i = 0; i < dz2.size(); ++i)
      dz2.data()[i] *= GeluDerivative(cache.z2.data()[i]);
    da = AffineBackward(cache.a1, params.w2, dz2, g.w2, g.b2);
  }
  Matrix dz1 = da;
  for (std::size_t i = 0; i < dz1.size(); ++i)
    dz1.data()[i] *= GeluDerivative(cache.z1.data()[i]);
  AffineBackward(cache.windowed, params.w1, dz1, g.w1, g.b1);
  return g;
}

}  // namespace peakctc
