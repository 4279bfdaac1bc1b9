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
#include <cstdint>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "rejex/core.hpp"
#include "rejex/exact_oracle.hpp"
#include "rejex/exceed.hpp"

namespace rejex::exceed {
namespace {

TEST(TrainingFrequencyTest, CountsInclusive) {
  const ScoreSet train({1, 2, 3, 4}, 0.1);
  EXPECT_DOUBLE_EQ(TrainingFrequency(train, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(TrainingFrequency(train, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(TrainingFrequency(ScoreSet({1, 1, 1, 1}, 0.1), 1.0), 1.0);
}

TEST(TrainingFrequencyTest, RejectsNonFinite) {
  const ScoreSet train({1, 2}, 0.1);
  EXPECT_THROW(TrainingFrequency(train, std::nan("")), Error);
}

TEST(AnomalyRanksTest, FloorWithRoundingSlack) {
  EXPECT_EQ(AnomalyRanks(50, 0.0), 0u);
  EXPECT_EQ(AnomalyRanks(10, 0.1), 1u);
  EXPECT_EQ(AnomalyRanks(10, 0.25), 2u);
  EXPECT_EQ(AnomalyRanks(100, 0.29), 29u);  // 0.29 * 100 = 28.999...
  EXPECT_EQ(ThresholdRank(100, 0.29), 29u);
  EXPECT_EQ(ThresholdRank(10, 0.25), 3u);
  EXPECT_EQ(ThresholdRank(10, 0.0), 0u);
}

TEST(StabilityProbabilityTest, ZeroGammaIsEmptySum) {
  for (double psi : {0.0, 0.3, 1.0}) EXPECT_EQ(StabilityProbability(psi, 50, 0.0), 0.0);
  EXPECT_EQ(StabilityProbability(0.5, 9, 0.1), 0.0);  // floor(0.9) = 0
}

TEST(StabilityProbabilityTest, SingleTermCase) {
  EXPECT_NEAR(StabilityProbability(1.0, 10, 0.1), std::pow(11.0 / 12.0, 10), 1e-15);
  EXPECT_NEAR(StabilityProbability(1.0, 10, 0.1), 0.41890388788459293, 1e-15);
}

TEST(StabilityProbabilityTest, TwoTermCase) {
  // q = 1/2, a = 2: (C(10,9) + C(10,10)) / 2^10.
  EXPECT_NEAR(StabilityProbability(0.5, 10, 0.2), 11.0 / 1024.0, 1e-16);
}

TEST(StabilityProbabilityTest, FrozenValues) {
  // Exact rational summation, rounded to double.
  const std::vector<std::tuple<std::size_t, double, double, double>> cases = {
      {100, 0.9, 0.1, 0.35278747273321476},
      {1000, 0.95, 0.1, 0.99999999978353},
      {50, 0.5, 0.3, 0.0013010857283610733},
      {200, 0.97, 0.02, 0.08174149027707862},
  };
  for (const auto& [n, psi, gamma, expected] : cases) {
    EXPECT_NEAR(StabilityProbability(psi, n, gamma) / expected, 1.0, 1e-10) << n << " " << psi;
  }
}

TEST(StabilityProbabilityTest, MatchesExactOracleOnSmallGrid) {
  for (std::size_t n : {1u, 2u, 7u, 33u, 120u}) {
    for (std::int64_t g : {5, 20, 49}) {
      for (std::int64_t k = 0; k <= 10; ++k) {
        const auto exact_p = exact::StabilityProbability(n, {k, 10}, {g, 100});
        const double fast = StabilityProbability(static_cast<double>(k) / 10.0, n, static_cast<double>(g) / 100.0);
        if (exact_p == 0) {
          EXPECT_EQ(fast, 0.0);
        } else {
          EXPECT_LE(exact::RelativeError(fast, exact_p), 1e-10) << n << " " << g << " " << k;
        }
      }
    }
  }
}

TEST(StabilityProbabilityTest, LargeNStaysFinite) {
  for (double psi : {0.0, 0.5, 0.9, 0.95, 1.0}) {
    const auto tails = ComputeTails(psi, 20000, 0.05);
    EXPECT_FALSE(std::isnan(tails.log_p_anomaly));
    EXPECT_LE(tails.log_p_anomaly, 0.0);
    EXPECT_LE(tails.log_p_normal, 0.0);
  }
}

TEST(StabilityProbabilityTest, Domain) {
  EXPECT_THROW(StabilityProbability(-0.1, 10, 0.1), Error);
  EXPECT_THROW(StabilityProbability(1.1, 10, 0.1), Error);
  EXPECT_THROW(StabilityProbability(0.5, 0, 0.1), Error);
  EXPECT_THROW(StabilityProbability(0.5, 10, 0.5), Error);
}

TEST(StabilityPropertyTest, MonotoneInPsi) {
  for (std::size_t n : {10u, 100u, 1000u, 20000u}) {
    for (double gamma : {0.02, 0.1, 0.3}) {
      if (AnomalyRanks(n, gamma) == 0) continue;
      double prev = StabilityProbability(0.0, n, gamma);
      for (int i = 1; i <= 10000; ++i) {
        const double p = StabilityProbability(static_cast<double>(i) / 10000.0, n, gamma);
        ASSERT_GE(p, prev - 1e-12) << n << " " << gamma << " " << i;
        prev = p;
      }
    }
  }
}

TEST(StabilityPropertyTest, TailsPartitionTheMass) {
  for (std::size_t n : {1u, 10u, 100u, 1000u, 10000u}) {
    for (double gamma : {0.01, 0.1, 0.3, 0.49}) {
      if (AnomalyRanks(n, gamma) == 0) continue;
      for (int i = 0; i <= 100; ++i) {
        const double psi = static_cast<double>(i) / 100.0;
        const auto t = ComputeTails(psi, n, gamma);
        EXPECT_NEAR(t.p_anomaly() + t.p_normal(), 1.0, 1e-12) << n << " " << gamma << " " << psi;
      }
    }
  }
}

TEST(ConfidenceTest, Examples) {
  EXPECT_DOUBLE_EQ(Confidence(0.5), 0.0);
  EXPECT_DOUBLE_EQ(Confidence(1.0), 1.0);
  EXPECT_DOUBLE_EQ(Confidence(0.25), 0.5);
  EXPECT_DOUBLE_EQ(Confidence(0.0), 1.0);
}

TEST(RejectionBandTest, Examples) {
  const ToleranceSpec tol(32.0);
  EXPECT_TRUE(InRejectionBand(0.5, tol));
  EXPECT_FALSE(InRejectionBand(0.0, tol));
  EXPECT_TRUE(InRejectionBand(std::exp(-32.0), tol));
  EXPECT_FALSE(InRejectionBand(1.0, tol));
  EXPECT_FALSE(InRejectionBand(std::nextafter(std::exp(-32.0), 0.0), tol));
  EXPECT_THROW(InRejectionBand(1.5, tol), Error);
}

TEST(RejectionBandTest, AgreesWithConfidenceOnExactRationals) {
  // With T = 4, p = k/1000: p in [e^-4, 1 - e^-4] <=> |2p - 1| <= 1 - 2e^-4.
  const ToleranceSpec tol(4.0);
  const mpq_class tau = mpq_class(1) - 2 * mpq_class(std::exp(-4.0));
  const mpq_class low(std::exp(-4.0));
  for (int k = 0; k <= 1000; ++k) {
    const mpq_class p(k, 1000);
    mpq_class conf = 2 * p - 1;
    if (conf < 0) conf = -conf;
    const bool exact_band = p >= low && p <= 1 - low;
    EXPECT_EQ(exact_band, conf <= tau) << k;
    EXPECT_EQ(InRejectionBand(static_cast<double>(k) / 1000.0, tol), exact_band) << k;
  }
}

TEST(GInverseTest, ZeroTargetIsLeftEdge) {
  EXPECT_EQ(GInverse(0.0, 10, 0.1), 0.0);
  EXPECT_EQ(GInverse(0.0, 1000, 0.3), 0.0);
}

TEST(GInverseTest, SingleTermCaseReachesOne) {
  EXPECT_NEAR(GInverse(std::pow(11.0 / 12.0, 10), 10, 0.1), 1.0, 1e-9);
}

TEST(GInverseTest, HalfwayPoint) {
  const double psi = GInverse(0.5, 1000, 0.1);
  EXPECT_NEAR(StabilityProbability(psi, 1000, 0.1), 0.5, 1e-9);
}

TEST(GInverseTest, DegenerateGThrows) {
  try {
    GInverse(0.5, 50, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateG);
  }
  EXPECT_THROW(GInverseByLowerTail(0.5, 9, 0.1), Error);
}

TEST(GInversePropertyTest, RoundTripAtBandEdges) {
  for (std::size_t n : {100u, 1000u, 10000u}) {
    for (double gamma : {0.02, 0.1, 0.3}) {
      for (double t : {4.0, 8.0, 16.0, 32.0}) {
        const double g0 = StabilityProbability(0.0, n, gamma);
        const double g1 = StabilityProbability(1.0, n, gamma);
        for (double p : {std::exp(-t), 0.5, 1.0 - std::exp(-t)}) {
          if (p < g0 || p > g1) continue;
          const double psi = GInverse(p, n, gamma);
          EXPECT_NEAR(StabilityProbability(psi, n, gamma), p, 1e-9) << n << " " << gamma << " " << t;
        }
      }
    }
  }
}

TEST(GInversePropertyTest, InfimumProperty) {
  const std::size_t n = 1000;
  const double gamma = 0.1;
  for (double p : {1e-14, 1e-5, 0.2, 0.7, 1.0 - 1e-10}) {
    const double psi = GInverse(p, n, gamma);
    EXPECT_GE(StabilityProbability(psi, n, gamma), p * (1 - 1e-12));
    if (psi > 1e-9) {
      EXPECT_LT(StabilityProbability(psi - 1e-9, n, gamma), p);
    }
  }
}

TEST(EvaluateTest, FillsEveryField) {
  const auto r = Evaluate(0.9, 100, 0.1, Decision::kAnomaly);
  EXPECT_DOUBLE_EQ(r.psi_n, 0.9);
  EXPECT_NEAR(r.p_anomaly, 0.35278747273321476, 1e-14);
  EXPECT_DOUBLE_EQ(r.confidence, std::abs(2 * r.p_anomaly - 1));
  EXPECT_EQ(r.base_label, Decision::kAnomaly);
}

}  // namespace
}  // namespace rejex::exceed
