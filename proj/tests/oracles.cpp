// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

#include "peakctc/numerics.hpp"

namespace peakctc::testing {

namespace {

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

Matrix EnumerateOccupancy(const ProbLattice &lattice, const LabelSeq &labels) {
  const std::size_t T = lattice.num_frames();
  const std::size_t V = lattice.vocab_size();
  if (T > 8 || V > 5)
    throw std::invalid_argument("EnumerateOccupancy: instance too large");
  Matrix occ(T, V, 0.0);
  std::vector<int> path(T, 0);
  double total = 0.0;
  while (true) {
    if (Collapse(path) == labels) {
      double p = 1.0;
      for (std::size_t t = 0; t < T; ++t) p *= lattice.probs(t, path[t]);
      total += p;
      for (std::size_t t = 0; t < T; ++t) occ(t, path[t]) += p;
    }
    std::size_t pos = 0;
    while (pos < T && ++path[pos] == static_cast<int>(V)) path[pos++] = 0;
    if (pos == T) break;
  }
  if (total <= 0.0)
    throw std::invalid_argument("EnumerateOccupancy: infeasible instance");
  for (double &v : occ.data()) v /= total;
  return occ;
}

Matrix FiniteDifference(const std::function<double(const Matrix &)> &f,
                        const Matrix &x, double h) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    double plus = f(probe);
    probe.data()[i] = orig - h;
    double minus = f(probe);
    probe.data()[i] = orig;
    grad.data()[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

void FiniteDifferenceInPlace(const std::function<double()> &f, Matrix &x,
                             Matrix &grad_out, double h) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    double orig = x.data()[i];
    x.data()[i] = orig + h;
    double plus = f();
    x.data()[i] = orig - h;
    double minus = f();
    x.data()[i] = orig;
    grad_out.data()[i] = (plus - minus) / (2.0 * h);
  }
}

RandomInstance MakeRandomInstance(std::mt19937_64 &rng, std::size_t max_t,
                                  std::size_t max_u, std::size_t max_v,
                                  std::size_t min_u) {
  std::uniform_int_distribution<std::size_t> v_dist(2, max_v);
  std::uniform_int_distribution<std::size_t> u_dist(min_u, max_u);
  std::uniform_int_distribution<std::size_t> t_dist(1, max_t);
  std::uniform_real_distribution<double> logit(-2.0, 2.0);
  std::uniform_real_distribution<double> tau_dist(0.5, 3.0);

  RandomInstance inst;
  std::size_t v = v_dist(rng);
  std::size_t u = u_dist(rng);
  std::uniform_int_distribution<int> tok(1, static_cast<int>(v) - 1);
  inst.labels.resize(u);
  for (int &t : inst.labels) t = tok(rng);
  std::size_t min_t = std::max<std::size_t>(1, MinFeasibleFrames(inst.labels));
  std::size_t t = std::max(t_dist(rng), min_t);

  Matrix raw(t, v);
  for (double &x : raw.data()) x = logit(rng);
  double tau = tau_dist(rng);
  inst.lattice.probs = TemperedSoftmaxRows(raw, tau);
  inst.lattice.frame_ms = 40.0;
  // logits that reproduce the lattice at temperature 1
  inst.logits = Matrix(t, v);
  for (std::size_t i = 0; i < raw.size(); ++i)
    inst.logits.data()[i] = std::log(inst.lattice.probs.data()[i]);
  return inst;
}

bool Close(double a, double b, double rel, double abs_tol) {
  return std::abs(a - b) <= abs_tol + rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace peakctc::testing
