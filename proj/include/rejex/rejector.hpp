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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "rejex/bounds.hpp"
#include "rejex/core.hpp"
#include "rejex/exceed.hpp"

namespace rejex {

/// A rejector fitted on training scores. Immutable; Predict is reentrant.
struct FittedRejector {
  ScoreSet train;
  /// Decision threshold: the ceil(n gamma)-th largest training score, or
  /// +infinity when gamma = 0 (every base prediction is Normal).
  double lambda = std::numeric_limits<double>::infinity();
  ToleranceSpec tol;
  bounds::RejectionBandSpec band;
  bounds::RejectionEstimate estimate;
  /// floor(n gamma) = 0: stability is identically zero, nothing is rejected
  /// and the estimate is reported as zero.
  bool degenerate_g = false;
};

struct Prediction {
  Decision decision = Decision::kNormal;
  exceed::StabilityResult stability;
};

inline double DecisionThreshold(const ScoreSet& train) {
  const std::size_t rank = exceed::ThresholdRank(train.n(), train.gamma());
  if (rank == 0) return std::numeric_limits<double>::infinity();
  return train.sorted()[train.n() - rank];
}

inline FittedRejector Fit(ScoreSet train, const ToleranceSpec& tol,
                          double delta = bounds::kDefaultDelta) {
  FittedRejector model{std::move(train), 0.0, tol, {}, {}, false};
  const std::size_t n = model.train.n();
  const double gamma = model.train.gamma();
  model.lambda = DecisionThreshold(model.train);
  model.band = bounds::MakeBandSpec(n, gamma, tol.t(), delta);
  model.degenerate_g = exceed::AnomalyRanks(n, gamma) == 0;
  if (!model.degenerate_g) {
    model.estimate = bounds::RejectionRateEstimate(model.train, tol);
  }
  return model;
}

inline Decision BaseLabel(const FittedRejector& model, double s) {
  return s >= model.lambda ? Decision::kAnomaly : Decision::kNormal;
}

inline Prediction Predict(const FittedRejector& model, double s) {
  const double psi = exceed::TrainingFrequency(model.train, s);
  Prediction out;
  out.stability = exceed::Evaluate(psi, model.train.n(), model.train.gamma(), BaseLabel(model, s));
  out.decision = exceed::InRejectionBand(out.stability.p_anomaly, model.tol)
                     ? Decision::kReject
                     : out.stability.base_label;
  return out;
}

inline std::vector<Prediction> PredictBatch(const FittedRejector& model,
                                            std::span<const double> test) {
  std::vector<Prediction> out;
  out.reserve(test.size());
  for (double s : test) out.push_back(Predict(model, s));
  return out;
}

/// Reject iff confidence <= threshold; otherwise keep the base label.
inline Decision DecideWithThreshold(const exceed::StabilityResult& r, double threshold) {
  return r.confidence <= threshold ? Decision::kReject : r.base_label;
}

/// Mean per-example cost (c_fp #FP + c_fn #FN + c_r #reject) / m. Rejections
/// are charged regardless of the hidden label.
inline double EmpiricalCost(std::span<const Decision> decisions, std::span<const int> labels,
                            const CostSpec& costs) {
  if (decisions.size() != labels.size()) {
    internal::Fail(ErrorCode::kLabelLengthMismatch, "decisions and labels differ in length");
  }
  if (decisions.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    switch (decisions[i]) {
      case Decision::kReject: total += costs.c_r; break;
      case Decision::kAnomaly: if (labels[i] == 0) total += costs.c_fp; break;
      case Decision::kNormal: if (labels[i] == 1) total += costs.c_fn; break;
    }
  }
  return total / static_cast<double>(decisions.size());
}

inline void RequireBinaryLabels(std::span<const int> labels, std::size_t n) {
  if (labels.size() != n) {
    internal::Fail(ErrorCode::kLabelLengthMismatch,
                   "expected " + std::to_string(n) + " labels, got " + std::to_string(labels.size()));
  }
  for (int y : labels) {
    if (y != 0 && y != 1) internal::Fail(ErrorCode::kNonBinaryLabels, "labels must be 0 or 1");
  }
}

/// In-sample stability of every training score, in the original order.
inline std::vector<exceed::StabilityResult> TrainingStability(const FittedRejector& model) {
  const auto scores = model.train.scores();
  const std::size_t n = model.train.n();
  const double gamma = model.train.gamma();
  // psi takes at most n distinct values k/n; evaluate each count once.
  std::vector<double> p_by_count(n + 1, -1.0);
  std::vector<exceed::StabilityResult> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t count = model.train.CountAtMost(scores[i]);
    if (p_by_count[count] < 0.0) {
      p_by_count[count] =
          exceed::StabilityProbability(static_cast<double>(count) / static_cast<double>(n), n, gamma);
    }
    auto& r = out[i];
    r.psi_n = static_cast<double>(count) / static_cast<double>(n);
    r.p_anomaly = p_by_count[count];
    r.confidence = exceed::Confidence(r.p_anomaly);
    r.base_label = BaseLabel(model, scores[i]);
  }
  return out;
}

/// Label-using threshold on the stability confidence: sweeps every distinct
/// training confidence plus {0, 1}, evaluates the empirical training cost of
/// "reject iff confidence <= threshold", and returns the cheapest threshold.
/// Ties go to the smaller threshold.
inline double OracleThresholdFromStability(std::span<const exceed::StabilityResult> stability,
                                           std::span<const int> labels, const CostSpec& costs) {
  const std::size_t n = stability.size();
  RequireBinaryLabels(labels, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return stability[x].confidence < stability[y].confidence;
  });
  // +1 false positive, -1 false negative, 0 correct.
  auto mistake = [&](std::size_t i) {
    const auto& r = stability[i];
    if (r.base_label == Decision::kAnomaly && labels[i] == 0) return 1;
    if (r.base_label == Decision::kNormal && labels[i] == 1) return -1;
    return 0;
  };
  std::size_t kept_fp = 0;
  std::size_t kept_fn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int m = mistake(i);
    if (m > 0) ++kept_fp;
    if (m < 0) ++kept_fn;
  }

  std::vector<double> candidates;
  candidates.reserve(n + 2);
  candidates.push_back(0.0);
  for (std::size_t i : order) candidates.push_back(stability[i].confidence);
  candidates.push_back(1.0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  double best_threshold = candidates.front();
  double best_cost = std::numeric_limits<double>::infinity();
  std::size_t rejected = 0;
  for (double theta : candidates) {
    while (rejected < n && stability[order[rejected]].confidence <= theta) {
      const int m = mistake(order[rejected]);
      if (m > 0) --kept_fp;
      if (m < 0) --kept_fn;
      ++rejected;
    }
    const double cost = costs.c_r * static_cast<double>(rejected) +
                        costs.c_fp * static_cast<double>(kept_fp) +
                        costs.c_fn * static_cast<double>(kept_fn);
    if (cost < best_cost) {
      best_cost = cost;
      best_threshold = theta;
    }
  }
  return best_threshold;
}

inline double OracleThreshold(const ScoreSet& train, std::span<const int> train_labels,
                              const ToleranceSpec& tol, const CostSpec& costs) {
  RequireBinaryLabels(train_labels, train.n());
  const FittedRejector model{train, DecisionThreshold(train), tol, {}, {}, false};
  const auto stability = TrainingStability(model);
  return OracleThresholdFromStability(stability, train_labels, costs);
}

}  // namespace rejex
