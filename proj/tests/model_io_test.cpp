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
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rejex/model_io.hpp"

namespace rejex::model_io {
namespace {

std::vector<double> Gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

TEST(ModelIoTest, ScoreModelRoundTrip) {
  const Model model{Fit(ScoreSet(Gaussian(400, 1), 0.1), ToleranceSpec(16), 0.1), std::nullopt};
  const auto j = ToJson(model);
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  const auto back = FromJson(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.rejector.lambda, model.rejector.lambda);
  EXPECT_EQ(back.rejector.estimate.r_hat, model.rejector.estimate.r_hat);
  EXPECT_EQ(back.rejector.band.h, model.rejector.band.h);
  EXPECT_EQ(back.rejector.tol.t(), 16.0);
  const auto test = Gaussian(100, 2);
  for (double s : test) EXPECT_EQ(Predict(back.rejector, s).decision, Predict(model.rejector, s).decision);
}

TEST(ModelIoTest, ZeroGammaStoresNullLambda) {
  const Model model{Fit(ScoreSet({1, 2, 3}, 0.0), ToleranceSpec(8)), std::nullopt};
  const auto j = ToJson(model);
  EXPECT_TRUE(j.at("lambda").is_null());
  EXPECT_TRUE(std::isinf(FromJson(j).rejector.lambda));
}

TEST(ModelIoTest, DetectorModelRoundTrip) {
  detectors::Matrix x(60, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < 60; ++i) {
    x(i, 0) = normal(rng);
    x(i, 1) = normal(rng);
  }
  detectors::DetectorSpec spec;
  spec.kind = detectors::DetectorKind::kIForest;
  spec.seed = 9;
  auto det = detectors::FitDetector(spec, x);
  std::vector<double> scores(det.training_scores().begin(), det.training_scores().end());
  const Model model{Fit(ScoreSet(scores, 0.1), ToleranceSpec(32)), std::move(det)};

  const auto path = std::filesystem::temp_directory_path() / "rejex_model_io_test.json";
  Save(model, path.string());
  const auto back = Load(path.string());
  std::filesystem::remove(path);
  ASSERT_TRUE(back.detector.has_value());
  EXPECT_EQ(back.detector->dims(), 2u);
  EXPECT_EQ(back.rejector.lambda, model.rejector.lambda);
  EXPECT_EQ(back.detector->Score(x), model.detector->Score(x));
}

TEST(ModelIoTest, SchemaErrors) {
  const Model model{Fit(ScoreSet({1, 2, 3, 4}, 0.25), ToleranceSpec(8)), std::nullopt};
  auto expect_schema = [](const nlohmann::json& j) {
    try {
      FromJson(j);
      FAIL() << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
    }
  };
  auto j = ToJson(model);
  j["schema_version"] = 99;
  expect_schema(j);
  j = ToJson(model);
  j["format"] = "other";
  expect_schema(j);
  j = ToJson(model);
  j["lambda"] = 123.0;
  expect_schema(j);
  j = ToJson(model);
  j.erase("gamma");
  expect_schema(j);
}

TEST(ModelIoTest, UnreadableFile) {
  const auto path = std::filesystem::temp_directory_path() / "rejex_model_io_bad.json";
  std::ofstream(path) << "{not json";
  EXPECT_THROW(Load(path.string()), Error);
  std::filesystem::remove(path);
  EXPECT_THROW(Load("/nonexistent/rejex.json"), Error);
}

}  // namespace
}  // namespace rejex::model_io
