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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rejex/detectors.hpp"

namespace rejex::detectors {
namespace {

DetectorSpec Spec(DetectorKind kind, std::size_t k = 10) {
  DetectorSpec s;
  s.kind = kind;
  s.k = k;
  s.seed = 42;
  return s;
}

Matrix FromRows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

/// Values on a 1/8 grid, so shifting by a power of two is exact.
Matrix DyadicCloud(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cell(-64, 64);
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = cell(rng) / 8.0;
  }
  return m;
}

std::vector<std::size_t> Order(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

TEST(DetectorKindTest, ParseNames) {
  EXPECT_EQ(ParseDetectorKind("knn"), DetectorKind::kKnnDist);
  EXPECT_EQ(ParseDetectorKind("lof"), DetectorKind::kLof);
  EXPECT_EQ(ParseDetectorKind("iforest"), DetectorKind::kIForest);
  EXPECT_EQ(ParseDetectorKind("hbos"), DetectorKind::kHbos);
  EXPECT_FALSE(ParseDetectorKind("ocsvm").has_value());
  for (auto k : kAllDetectors) EXPECT_EQ(ParseDetectorKind(ToString(k)), k);
}

TEST(KnnDistTest, IsolatedTrainingPointScoresHigh) {
  const auto det = FitDetector(Spec(DetectorKind::kKnnDist, 1), FromRows({{0}, {1}, {10}}));
  const auto mid = det.Score(FromRows({{0.5}}));
  EXPECT_DOUBLE_EQ(det.training_scores()[2], 9.0);
  EXPECT_GT(det.training_scores()[2], mid[0]);
}

TEST(KnnDistTest, NearestDistance) {
  const auto det = FitDetector(Spec(DetectorKind::kKnnDist, 1), FromRows({{0}, {1}}));
  EXPECT_DOUBLE_EQ(det.Score(FromRows({{0.5}}))[0], 0.5);
  EXPECT_DOUBLE_EQ(det.Score(FromRows({{3}}))[0], 2.0);
}

TEST(HbosTest, ConstantColumnGivesEqualScores) {
  const auto det = FitDetector(Spec(DetectorKind::kHbos), FromRows({{2}, {2}, {2}, {2}, {2}}));
  const auto s = det.training_scores();
  for (double v : s) EXPECT_EQ(v, s[0]);
}

TEST(HbosTest, OutOfRangeGetsEmptyBinDensity) {
  const auto det = FitDetector(Spec(DetectorKind::kHbos), FromRows({{0}, {1}, {2}, {3}}));
  // 4 rows, 10 bins: log((n + bins) / 1).
  EXPECT_NEAR(det.Score(FromRows({{100}}))[0], std::log(14.0), 1e-12);
}

TEST(HbosTest, AdditiveOverFeatures) {
  const Matrix both = DyadicCloud(200, 2, 1);
  Matrix first(200, 1), second(200, 1);
  for (std::size_t i = 0; i < 200; ++i) {
    first(i, 0) = both(i, 0);
    second(i, 0) = both(i, 1);
  }
  const auto a = FitDetector(Spec(DetectorKind::kHbos), both);
  const auto b = FitDetector(Spec(DetectorKind::kHbos), first);
  const auto c = FitDetector(Spec(DetectorKind::kHbos), second);
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_NEAR(a.training_scores()[i], b.training_scores()[i] + c.training_scores()[i], 1e-12);
  }
}

TEST(IForestTest, SameSeedSameScores) {
  const Matrix x = DyadicCloud(300, 3, 2);
  const auto a = FitDetector(Spec(DetectorKind::kIForest), x);
  const auto b = FitDetector(Spec(DetectorKind::kIForest), x);
  EXPECT_TRUE(std::equal(a.training_scores().begin(), a.training_scores().end(), b.training_scores().begin()));
}

TEST(IForestTest, DuplicatedPointScoresBelowExtremePoint) {
  std::vector<std::vector<double>> rows(50, std::vector<double>{0.0, 0.0});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 49; ++i) rows.push_back({normal(rng), normal(rng)});
  rows.push_back({25.0, -25.0});
  const auto det = FitDetector(Spec(DetectorKind::kIForest), FromRows(rows));
  const auto s = det.training_scores();
  EXPECT_LT(s[0], s[99]);
  for (double v : s) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(LofTest, UniformGridInteriorIsNearOne) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) rows.push_back({static_cast<double>(i), static_cast<double>(j)});
  }
  const auto det = FitDetector(Spec(DetectorKind::kLof), FromRows(rows));
  EXPECT_NEAR(det.training_scores()[10 * 20 + 10], 1.0, 0.2);
  EXPECT_NEAR(det.Score(FromRows({{9.5, 9.5}}))[0], 1.0, 0.2);
  EXPECT_GT(det.Score(FromRows({{60.0, 60.0}}))[0], 2.0);
}

TEST(DetectorPropertyTest, OutliersScoreHigherThanBulk) {
  Matrix x = DyadicCloud(200, 2, 4);
  x(0, 0) = 400.0;
  x(0, 1) = -400.0;
  for (auto kind : kAllDetectors) {
    const auto det = FitDetector(Spec(kind), x);
    const auto s = det.training_scores();
    const double mx = *std::max_element(s.begin() + 1, s.end());
    EXPECT_GT(s[0], mx) << ToString(kind);
  }
}

TEST(DetectorPropertyTest, ScoresFiniteForFiniteInput) {
  const Matrix x = DyadicCloud(100, 3, 5);
  const Matrix far = FromRows({{1e6, -1e6, 0}, {0, 0, 0}, {1e-300, 5, 5}});
  for (auto kind : kAllDetectors) {
    const auto det = FitDetector(Spec(kind), x);
    for (double v : det.training_scores()) EXPECT_TRUE(std::isfinite(v));
    for (double v : det.Score(far)) EXPECT_TRUE(std::isfinite(v)) << ToString(kind);
  }
}

TEST(DetectorPropertyTest, DuplicatedRowsStayFinite) {
  const Matrix x = FromRows(std::vector<std::vector<double>>(30, std::vector<double>{1.0, 1.0}));
  for (auto kind : kAllDetectors) {
    const auto det = FitDetector(Spec(kind), x);
    for (double v : det.training_scores()) EXPECT_TRUE(std::isfinite(v)) << ToString(kind);
  }
}

TEST(DetectorPropertyTest, TranslationKeepsNeighborRankOrder) {
  const Matrix x = DyadicCloud(150, 2, 6);
  Matrix shifted = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) shifted(i, j) += 1024.0;
  }
  for (auto kind : {DetectorKind::kKnnDist, DetectorKind::kLof}) {
    const auto a = FitDetector(Spec(kind), x);
    const auto b = FitDetector(Spec(kind), shifted);
    const std::vector<double> sa(a.training_scores().begin(), a.training_scores().end());
    const std::vector<double> sb(b.training_scores().begin(), b.training_scores().end());
    EXPECT_EQ(Order(sa), Order(sb)) << ToString(kind);
  }
}

TEST(DetectorPropertyTest, RowOrderDoesNotMatter) {
  const Matrix x = DyadicCloud(300, 3, 7);
  std::vector<std::size_t> perm(x.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(8));
  const Matrix permuted = x.Select(perm);
  const Matrix queries = DyadicCloud(20, 3, 9);
  for (auto kind : kAllDetectors) {
    const auto a = FitDetector(Spec(kind), x);
    const auto b = FitDetector(Spec(kind), permuted);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      EXPECT_NEAR(b.training_scores()[i], a.training_scores()[perm[i]], 1e-12) << ToString(kind);
    }
    const auto qa = a.Score(queries);
    const auto qb = b.Score(queries);
    for (std::size_t i = 0; i < qa.size(); ++i) EXPECT_NEAR(qa[i], qb[i], 1e-12) << ToString(kind);
  }
}

TEST(DetectorValidationTest, Errors) {
  try {
    FitDetector(Spec(DetectorKind::kKnnDist, 5), DyadicCloud(5, 2, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
  EXPECT_THROW(FitDetector(Spec(DetectorKind::kLof, 0), DyadicCloud(20, 2, 1)), Error);
  Matrix bad = DyadicCloud(20, 2, 1);
  bad(3, 1) = std::nan("");
  try {
    FitDetector(Spec(DetectorKind::kHbos), bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteInput);
  }
  const auto det = FitDetector(Spec(DetectorKind::kHbos), DyadicCloud(20, 2, 1));
  try {
    det.Score(DyadicCloud(3, 3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

}  // namespace
}  // namespace rejex::detectors
