// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <cmath>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "peakctc/ctc.hpp"
#include "peakctc/numerics.hpp"

using namespace peakctc;
using peakctc::testing::Close;
using peakctc::testing::EnumerateOccupancy;
using peakctc::testing::FiniteDifference;
using peakctc::testing::MakeRandomInstance;

namespace {

// T=2, V=2, label [a]: the worked instance. Paths (a,a), (phi,a), (a,phi)
// have probabilities 0.42, 0.28, 0.18; total 0.88.
ProbLattice WorkedLattice() {
  Matrix p(2, 2);
  p(0, 0) = 0.4; p(0, 1) = 0.6;
  p(1, 0) = 0.3; p(1, 1) = 0.7;
  return {p, 40.0};
}

}  // namespace

TEST_CASE("ExtendLabels") {
  CHECK(ExtendLabels({}) == ExtendedLabel{0});
  CHECK(ExtendLabels({1}) == ExtendedLabel{0, 1, 0});
  CHECK(ExtendLabels({1, 1}) == ExtendedLabel{0, 1, 0, 1, 0});
  CHECK(ExtendLabels({1, 2}) == ExtendedLabel{0, 1, 0, 2, 0});
  CHECK_THROWS_AS(ExtendLabels({1, 0, 2}), std::invalid_argument);
}

TEST_CASE("MinFeasibleFrames") {
  CHECK(MinFeasibleFrames({}) == 0);
  CHECK(MinFeasibleFrames({1}) == 1);
  CHECK(MinFeasibleFrames({1, 1}) == 3);
  CHECK(MinFeasibleFrames({1, 2, 2, 2}) == 6);
}

TEST_CASE("ForwardAlphas initialization and T=1") {
  Matrix p(1, 2);
  p(0, 0) = 0.4; p(0, 1) = 0.6;
  ProbLattice lattice{p, 40.0};
  Matrix alpha = ForwardAlphas(lattice, ExtendLabels({1}));
  CHECK(alpha(0, 0) == doctest::Approx(std::log(0.4)).epsilon(1e-15));
  CHECK(alpha(0, 1) == doctest::Approx(std::log(0.6)).epsilon(1e-15));
  CHECK(alpha(0, 2) == kLogZero);
}

TEST_CASE("ForwardAlphas terminal mass on the worked instance") {
  ProbLattice lattice = WorkedLattice();
  Matrix alpha = ForwardAlphas(lattice, ExtendLabels({1}));
  double total = LogSumExp2(alpha(1, 1), alpha(1, 2));
  CHECK(std::exp(total) == doctest::Approx(0.88).epsilon(1e-12));
}

TEST_CASE("Infeasible label raises with the required minimum") {
  ProbLattice lattice = WorkedLattice();  // T=2
  try {
    ForwardAlphas(lattice, ExtendLabels({1, 1}));
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError &e) {
    CHECK(e.num_frames() == 2);
    CHECK(e.min_frames() == 3);
  }
  CHECK_THROWS_AS(CtcNegLogLikelihood(lattice, {1, 1}), InfeasibleError);
}

TEST_CASE("BackwardBetas terminal frame and alpha-beta totals") {
  Matrix p1(1, 2);
  p1(0, 0) = 0.4; p1(0, 1) = 0.6;
  ProbLattice one{p1, 40.0};
  Matrix beta1 = BackwardBetas(one, ExtendLabels({1}));
  CHECK(beta1(0, 1) == 0.0);
  CHECK(beta1(0, 2) == 0.0);

  ProbLattice lattice = WorkedLattice();
  ExtendedLabel ext = ExtendLabels({1});
  Matrix alpha = ForwardAlphas(lattice, ext);
  Matrix beta = BackwardBetas(lattice, ext);
  for (std::size_t t = 0; t < 2; ++t) {
    std::vector<double> terms;
    for (std::size_t u = 0; u < ext.size(); ++u)
      terms.push_back(alpha(t, u) + beta(t, u));
    CHECK(LogSumExp(terms) == doctest::Approx(std::log(0.88)).epsilon(1e-12));
  }
}

TEST_CASE("All-blank label follows the single blank path") {
  ProbLattice lattice = WorkedLattice();
  ExtendedLabel ext = ExtendLabels({});
  Matrix beta = BackwardBetas(lattice, ext);
  // beta(0,0) holds the remaining blank emission at t=1
  CHECK(beta(0, 0) == doctest::Approx(std::log(0.3)).epsilon(1e-12));
  CHECK(CtcNegLogLikelihood(lattice, {}) ==
        doctest::Approx(-std::log(0.4 * 0.3)).epsilon(1e-12));
}

TEST_CASE("CtcNegLogLikelihood worked values") {
  Matrix p1(1, 2);
  p1(0, 0) = 0.4; p1(0, 1) = 0.6;
  CHECK(CtcNegLogLikelihood({p1, 40.0}, {1}) ==
        doctest::Approx(-std::log(0.6)).epsilon(1e-12));
  CHECK(CtcNegLogLikelihood(WorkedLattice(), {1}) ==
        doctest::Approx(-std::log(0.88)).epsilon(1e-12));
}

TEST_CASE("BruteForceLikelihood basics and guards") {
  Matrix p1(1, 2);
  p1(0, 0) = 0.4; p1(0, 1) = 0.6;
  CHECK(BruteForceLikelihood({p1, 40.0}, {1}) ==
        doctest::Approx(-std::log(0.6)).epsilon(1e-12));
  CHECK(BruteForceLikelihood(WorkedLattice(), {1}) ==
        doctest::Approx(-std::log(0.88)).epsilon(1e-12));
  CHECK_THROWS_AS(BruteForceLikelihood(WorkedLattice(), {1, 1}), InfeasibleError);
  Matrix big(9, 2, 0.5);
  CHECK_THROWS_AS(BruteForceLikelihood({big, 40.0}, {1}), std::invalid_argument);
}

TEST_CASE("DP likelihood matches the enumeration oracle") {
  std::mt19937_64 rng(42);
  for (int it = 0; it < 200; ++it) {
    auto inst = MakeRandomInstance(rng);
    double dp = CtcNegLogLikelihood(inst.lattice, inst.labels);
    double oracle = BruteForceLikelihood(inst.lattice, inst.labels);
    CHECK(std::abs(dp - oracle) <= 1e-9);
  }
}

TEST_CASE("Alpha-beta total is constant in t") {
  std::mt19937_64 rng(43);
  for (int it = 0; it < 100; ++it) {
    auto inst = MakeRandomInstance(rng);
    double nll = CtcNegLogLikelihood(inst.lattice, inst.labels);
    ExtendedLabel ext = ExtendLabels(inst.labels);
    Matrix alpha = ForwardAlphas(inst.lattice, ext);
    Matrix beta = BackwardBetas(inst.lattice, ext);
    for (std::size_t t = 0; t < inst.lattice.num_frames(); ++t) {
      std::vector<double> terms;
      for (std::size_t u = 0; u < ext.size(); ++u)
        terms.push_back(alpha(t, u) + beta(t, u));
      CHECK(std::abs(-LogSumExp(terms) - nll) <= 1e-9);
    }
  }
}

TEST_CASE("Occupancy on the worked instance and forced path") {
  Matrix p1(1, 2);
  p1(0, 0) = 0.4; p1(0, 1) = 0.6;
  ProbLattice one{p1, 40.0};
  ExtendedLabel ext = ExtendLabels({1});
  Matrix alpha = ForwardAlphas(one, ext);
  Matrix beta = BackwardBetas(one, ext);
  Matrix occ = Occupancy(alpha, beta, ext, 2, -std::log(0.6));
  CHECK(occ(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(occ(0, 0) == doctest::Approx(0.0).epsilon(1e-12));

  ProbLattice lattice = WorkedLattice();
  Matrix a2 = ForwardAlphas(lattice, ext);
  Matrix b2 = BackwardBetas(lattice, ext);
  Matrix occ2 = Occupancy(a2, b2, ext, 2, std::log(1.0 / 0.88));
  // frame 0 carries token mass from paths (a,a) and (a,phi)
  CHECK(occ2(0, 1) == doctest::Approx((0.42 + 0.18) / 0.88).epsilon(1e-12));
  CHECK(occ2(0, 0) == doctest::Approx(0.28 / 0.88).epsilon(1e-12));
}

TEST_CASE("Occupancy matches path enumeration and rows sum to 1") {
  std::mt19937_64 rng(44);
  for (int it = 0; it < 100; ++it) {
    auto inst = MakeRandomInstance(rng);
    ExtendedLabel ext = ExtendLabels(inst.labels);
    Matrix alpha = ForwardAlphas(inst.lattice, ext);
    Matrix beta = BackwardBetas(inst.lattice, ext);
    double nll = CtcNegLogLikelihood(inst.lattice, inst.labels);
    Matrix occ = Occupancy(alpha, beta, ext, inst.lattice.vocab_size(), nll);
    Matrix oracle = EnumerateOccupancy(inst.lattice, inst.labels);
    for (std::size_t t = 0; t < occ.rows(); ++t) {
      double sum = 0.0;
      for (std::size_t k = 0; k < occ.cols(); ++k) {
        CHECK(occ(t, k) >= 0.0);
        CHECK(occ(t, k) <= 1.0 + 1e-12);
        CHECK(std::abs(occ(t, k) - oracle(t, k)) <= 1e-9);
        sum += occ(t, k);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("CtcGradWrtProbs worked value and unoccupied cells") {
  Matrix p1(1, 2);
  p1(0, 0) = 0.4; p1(0, 1) = 0.6;
  ProbLattice one{p1, 40.0};
  ExtendedLabel ext = ExtendLabels({1});
  Matrix occ = Occupancy(ForwardAlphas(one, ext), BackwardBetas(one, ext), ext,
                         2, -std::log(0.6));
  Matrix grad = CtcGradWrtProbs(occ, one);
  CHECK(grad(0, 0) == 0.0);
  CHECK(grad(0, 1) == doctest::Approx(-1.0 / 0.6).epsilon(1e-12));
}

TEST_CASE("CtcGradWrtProbs matches finite differences") {
  std::mt19937_64 rng(45);
  for (int it = 0; it < 30; ++it) {
    auto inst = MakeRandomInstance(rng, 5, 2, 3);
    ExtendedLabel ext = ExtendLabels(inst.labels);
    Matrix alpha = ForwardAlphas(inst.lattice, ext);
    Matrix beta = BackwardBetas(inst.lattice, ext);
    double nll = CtcNegLogLikelihood(inst.lattice, inst.labels);
    Matrix occ = Occupancy(alpha, beta, ext, inst.lattice.vocab_size(), nll);
    Matrix grad = CtcGradWrtProbs(occ, inst.lattice);
    auto labels = inst.labels;
    double frame_ms = inst.lattice.frame_ms;
    Matrix fd = FiniteDifference(
        [&](const Matrix &p) {
          return CtcNegLogLikelihood({p, frame_ms}, labels);
        },
        inst.lattice.probs);
    for (std::size_t i = 0; i < grad.size(); ++i)
      CHECK(Close(grad.data()[i], fd.data()[i], 1e-5, 1e-6));
  }
}

TEST_CASE("CtcGradWrtLogits worked value, zero row sums, finite differences") {
  Matrix p1(1, 2);
  p1(0, 0) = 0.4; p1(0, 1) = 0.6;
  ProbLattice one{p1, 40.0};
  ExtendedLabel ext = ExtendLabels({1});
  Matrix occ = Occupancy(ForwardAlphas(one, ext), BackwardBetas(one, ext), ext,
                         2, -std::log(0.6));
  Matrix grad = CtcGradWrtLogits(occ, one);
  CHECK(grad(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(grad(0, 1) == doctest::Approx(-0.4).epsilon(1e-12));

  std::mt19937_64 rng(46);
  for (int it = 0; it < 30; ++it) {
    auto inst = MakeRandomInstance(rng, 5, 2, 3);
    ExtendedLabel ext2 = ExtendLabels(inst.labels);
    Matrix alpha = ForwardAlphas(inst.lattice, ext2);
    Matrix beta = BackwardBetas(inst.lattice, ext2);
    double nll = CtcNegLogLikelihood(inst.lattice, inst.labels);
    Matrix occ2 = Occupancy(alpha, beta, ext2, inst.lattice.vocab_size(), nll);
    Matrix g = CtcGradWrtLogits(occ2, inst.lattice);
    for (std::size_t t = 0; t < g.rows(); ++t) {
      double row_sum = 0.0;
      for (std::size_t k = 0; k < g.cols(); ++k) row_sum += g(t, k);
      CHECK(std::abs(row_sum) <= 1e-9);
    }
    auto labels = inst.labels;
    Matrix fd = FiniteDifference(
        [&](const Matrix &logits) {
          return CtcNegLogLikelihood({TemperedSoftmaxRows(logits, 1.0), 40.0},
                                     labels);
        },
        inst.logits);
    for (std::size_t i = 0; i < g.size(); ++i)
      CHECK(Close(g.data()[i], fd.data()[i], 1e-5, 1e-6));
  }
}

TEST_CASE("Extending T preserves feasibility") {
  std::mt19937_64 rng(47);
  for (int it = 0; it < 50; ++it) {
    auto inst = MakeRandomInstance(rng);
    // was feasible; append one uniform frame and it must stay feasible
    Matrix longer(inst.lattice.probs.rows() + 1, inst.lattice.probs.cols());
    for (std::size_t t = 0; t < inst.lattice.probs.rows(); ++t)
      for (std::size_t k = 0; k < longer.cols(); ++k)
        longer(t, k) = inst.lattice.probs(t, k);
    for (std::size_t k = 0; k < longer.cols(); ++k)
      longer(longer.rows() - 1, k) = 1.0 / static_cast<double>(longer.cols());
    CHECK_NOTHROW(CtcNegLogLikelihood({longer, 40.0}, inst.labels));
  }
}
