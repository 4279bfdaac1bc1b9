/*
 * Copyright 2026 The RejEx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "rejex/bounds.hpp"
#include "rejex/exceed.hpp"

namespace rejex::bounds {
namespace {

constexpr std::size_t kNs[] = {10, 100, 1000, 10000, 100000};
constexpr double kGammas[] = {0.0, 0.02, 0.1, 0.3, 0.49};
constexpr double kTs[] = {4.0, 8.0, 16.0, 32.0};

TEST(IntervalTest, FrozenEndpoints) {
  // Unclamped closed forms evaluated at 50 digits in their original
  // (non-rearranged) form.
  const std::vector<std::tuple<std::size_t, double, double, double, double>> cases = {
      {100, 0.1, 32, 0.52190553838196962928, 1.316},
      {1000, 0.1, 32, 0.78072949898583286954, 1.0275440886195486436},
      {1000, 0.1, 4, 0.88127105504057433307, 0.94561080226909578552},
      {10000, 0.02, 8, 0.96567405383254106492, 1.0001},
      {1000000, 0.1, 32, 0.89620879486500023585, 0.904000808},
      {100, 0.3, 16, 0.43660620849694278324, 0.99249956672411138996},
  };
  for (const auto& [n, gamma, t, t1, t2] : cases) {
    const auto iv = ComputeInterval(n, gamma, t);
    EXPECT_NEAR(iv.raw_t1, t1, 1e-12 * t1) << n << " " << gamma << " " << t;
    EXPECT_NEAR(iv.raw_t2, t2, 1e-12 * t2) << n << " " << gamma << " " << t;
    EXPECT_DOUBLE_EQ(iv.t1, std::clamp(t1, 0.0, 1.0));
    EXPECT_DOUBLE_EQ(iv.t2, std::clamp(t2, 0.0, 1.0));
    EXPECT_FALSE(iv.b1_clamped);
  }
}

TEST(IntervalTest, ContainsOneMinusGamma) {
  for (auto n : kNs) {
    for (auto gamma : kGammas) {
      for (auto t : kTs) {
        const auto iv = ComputeInterval(n, gamma, t);
        EXPECT_LE(iv.t1, 1.0 - gamma) << n << " " << gamma << " " << t;
        EXPECT_GE(iv.t2, 1.0 - gamma) << n << " " << gamma << " " << t;
        EXPECT_GE(iv.t1, 0.0);
        EXPECT_LE(iv.t2, 1.0);
      }
    }
  }
}

TEST(IntervalTest, NarrowsAtLargeN) {
  const auto iv = ComputeInterval(1000000, 0.1, 32);
  EXPECT_NEAR(iv.t1, 0.9, 0.01);
  EXPECT_NEAR(iv.t2, 0.9, 0.01);
}

TEST(IntervalTest, MonotoneInT) {
  double prev_t1 = 2.0;
  double prev_t2 = -1.0;
  for (auto t : kTs) {
    const auto iv = ComputeInterval(1000, 0.1, t);
    EXPECT_LE(iv.t1, prev_t1);
    EXPECT_GE(iv.t2, prev_t2);
    prev_t1 = iv.t1;
    prev_t2 = iv.t2;
  }
}

TEST(IntervalTest, WidthDecreasesInN) {
  for (double gamma : {0.02, 0.1, 0.3}) {
    for (auto t : kTs) {
      double prev = 2.0;
      for (std::size_t n = 100; n <= 1000000; n *= 10) {
        const auto iv = ComputeInterval(n, gamma, t);
        EXPECT_LT(iv.t2 - iv.t1, prev) << n;
        prev = iv.t2 - iv.t1;
      }
      EXPECT_LE(prev, 0.01);
    }
  }
}

TEST(IntervalTest, NoClampOnGrid) {
  for (std::size_t n : {100u, 1000u, 10000u}) {
    for (double gamma : {0.02, 0.1, 0.3}) {
      for (auto t : kTs) EXPECT_FALSE(ComputeInterval(n, gamma, t).b1_clamped);
    }
  }
}

TEST(IntervalTest, RejectsSmallT) {
  try {
    ComputeInterval(100, 0.1, 3.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomainError);
    EXPECT_STREQ(e.what(), "T must be >= 4");
  }
  EXPECT_THROW(ComputeInterval(0, 0.1, 8), Error);
}

TEST(IntervalImplicationTest, MidpointAndVacuousCase) {
  EXPECT_TRUE(InsideIntervalIsUnstable(1000, 0.1, 8, 0.9));
  EXPECT_TRUE(InsideIntervalIsUnstable(1000, 0.1, 8, 0.0));
}

TEST(IntervalImplicationTest, ConverseHoldsForLargerT) {
  // Outside the band the prediction is stable; checked on a psi grid.
  for (std::size_t n : {100u, 1000u, 10000u}) {
    for (double gamma : {0.02, 0.1, 0.3}) {
      for (double t : {8.0, 16.0, 32.0}) {
        for (int i = 0; i <= 200; ++i) {
          const double psi = static_cast<double>(i) / 200.0;
          EXPECT_TRUE(OutsideIntervalIsStable(n, gamma, t, psi)) << n << " " << gamma << " " << t << " " << psi;
        }
      }
    }
  }
}

TEST(RejectionRateBoundTest, DkwTerm) {
  const auto iv = ComputeInterval(100, 0.1, 4);
  EXPECT_NEAR(RejectionRateUpperBound(100, 0.1, 4, 0.05), std::min(1.0, iv.t2 - iv.t1 + 0.2716203031481239), 1e-15);
  const double dkw = 2.0 * std::sqrt(std::log(40.0) / 200.0);
  EXPECT_NEAR(dkw, 0.2716203031481239, 1e-15);
}

TEST(RejectionRateBoundTest, VanishesForHugeN) {
  EXPECT_LT(RejectionRateUpperBound(100000000, 0.1, 4, 0.05), 0.01);
  EXPECT_NEAR(RejectionRateUpperBound(100000000, 0.1, 4, 0.05), 0.0004746848066, 1e-10);
}

TEST(RejectionRateBoundTest, AtLeastBandWidthAndClamped) {
  for (auto n : kNs) {
    for (auto gamma : kGammas) {
      for (auto t : kTs) {
        for (double delta : {0.01, 0.05, 0.5}) {
          const auto iv = ComputeInterval(n, gamma, t);
          const double h = RejectionRateUpperBound(n, gamma, t, delta);
          EXPECT_GE(h, std::min(1.0, iv.t2 - iv.t1));
          EXPECT_GE(h, 0.0);
          EXPECT_LE(h, 1.0);
        }
      }
    }
  }
  EXPECT_THROW(RejectionRateUpperBound(100, 0.1, 8, 0.0), Error);
  EXPECT_THROW(RejectionRateUpperBound(100, 0.1, 8, 1.0), Error);
}

TEST(BandSpecTest, CarriesInterval) {
  const auto band = MakeBandSpec(1000, 0.1, 32, 0.05);
  const auto iv = ComputeInterval(1000, 0.1, 32);
  EXPECT_EQ(band.t1, iv.t1);
  EXPECT_EQ(band.t2, iv.t2);
  EXPECT_EQ(band.h, RejectionRateUpperBound(1000, 0.1, 32, 0.05));
}

TEST(InSampleFrequencyTest, TiesShareTheHighestRank) {
  const ScoreSet train({3, 1, 2, 2}, 0.1);
  EXPECT_EQ(InSampleFrequencies(train), (std::vector<double>{0.25, 0.75, 0.75, 1.0}));
}

TEST(InSampleFrequencyTest, DirectCdfMatchesFrequencyVector) {
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 2u, 7u, 100u, 1000u}) {
    std::uniform_int_distribution<int> value(0, static_cast<int>(n / 3 + 1));
    std::vector<double> scores(n);
    for (auto& s : scores) s = value(rng);
    const ScoreSet train(scores, 0.1);
    const auto psi = InSampleFrequencies(train);
    std::vector<double> probes = {-0.5, 0.0, 1.0, 1.5};
    for (std::size_t k = 0; k <= n; ++k) {
      const double u = static_cast<double>(k) / static_cast<double>(n);
      probes.insert(probes.end(), {u, std::nextafter(u, 0.0), std::nextafter(u, 2.0)});
    }
    for (double u : probes) {
      ASSERT_EQ(FrequencyCdf(train.sorted(), u), EmpiricalCdf(psi, u)) << n << " " << u;
    }
  }
}

TEST(EstimateTest, UniformGridMatchesInverseGap) {
  for (std::size_t n : {500u, 2000u, 8000u}) {
    std::vector<double> scores(n);
    std::iota(scores.begin(), scores.end(), 1.0);
    const ToleranceSpec tol(32);
    const auto est = RejectionRateEstimate(ScoreSet(scores, 0.1), tol);
    const double gap = exceed::GInverseByLowerTail(std::exp(-32.0), n, 0.1) - exceed::GInverse(std::exp(-32.0), n, 0.1);
    EXPECT_NEAR(est.r_hat, gap, 2.0 / static_cast<double>(n)) << n;
    EXPECT_LE(est.a, est.b);
  }
}

TEST(EstimateTest, IdenticalScoresGiveZeroOrOne) {
  const ToleranceSpec tol(32);
  const ScoreSet train(std::vector<double>(100, 7.0), 0.1);
  const auto est = RejectionRateEstimate(train, tol);
  const bool in_band = exceed::InRejectionBand(exceed::StabilityProbability(1.0, 100, 0.1), tol);
  EXPECT_EQ(est.r_hat, in_band ? 1.0 : 0.0);
}

TEST(EstimateTest, GaussianScores) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  std::vector<double> scores(5000);
  for (auto& s : scores) s = normal(rng);
  const auto est = RejectionRateEstimate(ScoreSet(scores, 0.1), ToleranceSpec(32));
  EXPECT_GE(est.r_hat, 0.0);
  EXPECT_LE(est.r_hat, 1.0);
  EXPECT_LE(est.a, est.b);
  EXPECT_LE(est.psi_low, 0.9);
  EXPECT_GE(est.psi_high, 0.9);
}

TEST(CostBoundTest, Arithmetic) {
  EXPECT_NEAR(ExpectedCostUpperBound(0.3, 0.5, 0.1, {1, 1, 0.1}).bound, 0.62, 1e-15);
}

TEST(CostBoundTest, ZeroBandAndZeroGamma) {
  const CostSpec c{2, 3, 0.05};
  EXPECT_NEAR(ExpectedCostUpperBound(0.4, 0.4, 0.1, c).bound, 0.1 * 3 + 0.6 * 2, 1e-15);
  EXPECT_NEAR(ExpectedCostUpperBound(0.2, 0.7, 0.0, {1, 1, 0}).bound, 0.3, 1e-15);
}

TEST(CostBoundTest, Validation) {
  EXPECT_THROW(ExpectedCostUpperBound(0.6, 0.5, 0.1, {1, 1, 0.1}), Error);
  EXPECT_THROW(ExpectedCostUpperBound(0.1, 0.5, 0.1, {1, 1, 0.5}), Error);
}

TEST(ScoreIntervalTest, ContainsDecisionThreshold) {
  std::vector<double> scores(100);
  std::iota(scores.begin(), scores.end(), 1.0);
  const auto si = ScoreRejectionInterval(ScoreSet(scores, 0.1), 32);
  EXPECT_LE(si.low, 90.0);
  EXPECT_GE(si.high, 90.0);
}

TEST(ScoreIntervalTest, IdenticalScores) {
  const ScoreSet train(std::vector<double>(50, 3.0), 0.1);
  try {
    const auto si = ScoreRejectionInterval(train, 32);
    EXPECT_EQ(si.low, 3.0);
    EXPECT_EQ(si.high, 3.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInterval);
  }
}

TEST(ScoreIntervalTest, ShrinksWithN) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif;
  double prev = 2.0;
  for (std::size_t n : {1000u, 10000u, 100000u, 1000000u}) {
    std::vector<double> scores(n);
    for (auto& s : scores) s = unif(rng);
    const auto si = ScoreRejectionInterval(ScoreSet(scores, 0.1), 4);
    EXPECT_LT(si.high - si.low, prev);
    prev = si.high - si.low;
  }
  EXPECT_LT(prev, 0.01);
}

}  // namespace
}  // namespace rejex::bounds
