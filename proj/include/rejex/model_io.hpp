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

#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rejex/core.hpp"
#include "rejex/detectors.hpp"
#include "rejex/rejector.hpp"

/// Versioned JSON model files for the fit/predict split.
namespace rejex::model_io {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kFormat = "rejex-model";

/// A fitted rejector, plus the detector that produced its scores when the
/// model was fitted on features.
struct Model {
  FittedRejector rejector;
  std::optional<detectors::FittedDetector> detector;
};

inline nlohmann::json ToJson(const Model& model) {
  const auto& r = model.rejector;
  nlohmann::json j;
  j["format"] = kFormat;
  j["schema_version"] = kSchemaVersion;
  j["gamma"] = r.train.gamma();
  j["t"] = r.tol.t();
  j["epsilon"] = r.tol.epsilon();
  j["delta"] = r.band.delta;
  j["n"] = r.train.n();
  j["lambda"] = std::isfinite(r.lambda) ? nlohmann::json(r.lambda) : nlohmann::json(nullptr);
  j["band"] = {{"t1", r.band.t1}, {"t2", r.band.t2}, {"h", r.band.h}};
  j["estimate"] = {{"a", r.estimate.a}, {"b", r.estimate.b}, {"r_hat", r.estimate.r_hat}};
  j["degenerate_g"] = r.degenerate_g;
  j["sorted_scores"] = std::vector<double>(r.train.sorted().begin(), r.train.sorted().end());
  if (model.detector) {
    const auto& d = *model.detector;
    const auto& spec = d.spec();
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < d.train().rows(); ++i) {
      rows.emplace_back(d.train().row(i).begin(), d.train().row(i).end());
    }
    j["detector"] = {{"kind", std::string(detectors::ToString(spec.kind))},
                     {"k", spec.k},
                     {"trees", spec.trees},
                     {"subsample", spec.subsample},
                     {"bins", spec.bins},
                     {"seed", spec.seed},
                     {"n_features", d.dims()},
                     {"train", rows}};
  } else {
    j["detector"] = nullptr;
  }
  return j;
}

/// Rebuilds a model. Everything derived is recomputed from the stored
/// scores (and detector training rows) and checked against the file.
inline Model FromJson(const nlohmann::json& j) {
  auto bad = [](const std::string& why) -> Model {
    internal::Fail(ErrorCode::kSchemaMismatch, "model file: " + why);
  };
  try {
    if (j.value("format", std::string()) != kFormat) return bad("not a rejex model");
    if (j.at("schema_version").get<int>() != kSchemaVersion) return bad("unsupported schema_version");
    const double gamma = j.at("gamma").get<double>();
    const double t = j.at("t").get<double>();
    const double delta = j.at("delta").get<double>();

    std::optional<detectors::FittedDetector> detector;
    std::vector<double> scores;
    if (!j.at("detector").is_null()) {
      const auto& dj = j.at("detector");
      detectors::DetectorSpec spec;
      const auto kind = detectors::ParseDetectorKind(dj.at("kind").get<std::string>());
      if (!kind) return bad("unknown detector kind");
      spec.kind = *kind;
      spec.k = dj.at("k").get<std::size_t>();
      spec.trees = dj.at("trees").get<std::size_t>();
      spec.subsample = dj.at("subsample").get<std::size_t>();
      spec.bins = dj.at("bins").get<std::size_t>();
      spec.seed = dj.at("seed").get<std::uint64_t>();
      const auto d = dj.at("n_features").get<std::size_t>();
      const auto rows = dj.at("train").get<std::vector<std::vector<double>>>();
      std::vector<double> flat;
      for (const auto& row : rows) {
        if (row.size() != d) return bad("detector training row has the wrong width");
        flat.insert(flat.end(), row.begin(), row.end());
      }
      detector.emplace(spec, detectors::Matrix(rows.size(), d, std::move(flat)));
      scores.assign(detector->training_scores().begin(), detector->training_scores().end());
    } else {
      scores = j.at("sorted_scores").get<std::vector<double>>();
    }

    Model model{Fit(ScoreSet(std::move(scores), gamma), ToleranceSpec(t), delta), std::move(detector)};
    const auto stored = j.at("sorted_scores").get<std::vector<double>>();
    const auto sorted = model.rejector.train.sorted();
    if (!std::equal(stored.begin(), stored.end(), sorted.begin(), sorted.end())) {
      return bad("stored scores do not match the refitted detector");
    }
    const auto& lam = j.at("lambda");
    const double lambda = lam.is_null() ? std::numeric_limits<double>::infinity() : lam.get<double>();
    if (lambda != model.rejector.lambda) return bad("stored lambda does not match the scores");
    return model;
  } catch (const nlohmann::json::exception& e) {
    return bad(e.what());
  }
}

inline void Save(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) internal::Fail(ErrorCode::kParseError, "cannot write " + path);
  out << ToJson(model).dump(2) << "\n";
}

inline Model Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) internal::Fail(ErrorCode::kParseError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    internal::Fail(ErrorCode::kSchemaMismatch, path + ": " + e.what());
  }
  return FromJson(j);
}

}  // namespace rejex::model_io
