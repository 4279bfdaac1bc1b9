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
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rejex/bounds.hpp"
#include "rejex/core.hpp"
#include "rejex/csv.hpp"
#include "rejex/detectors.hpp"
#include "rejex/exceed.hpp"
#include "rejex/rejector.hpp"

/// Evaluation harness: 80/20 folds, cost accounting, baselines, bound checks
/// and rank aggregation.
namespace rejex::bench {

using detectors::DetectorKind;
using detectors::DetectorSpec;
using detectors::Matrix;

inline constexpr std::size_t kMaxExamples = 20000;

struct Dataset {
  std::string name;
  Matrix x;
  std::optional<std::vector<int>> labels;
  double gamma = 0.0;

  std::size_t size() const { return x.rows(); }
};

inline double LabelMean(const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  return static_cast<double>(pos) / static_cast<double>(labels.size());
}

/// Keeps a seeded random subset of kMaxExamples rows, in original order.
inline void Subsample(Dataset& data, std::uint64_t seed) {
  if (data.size() <= kMaxExamples) return;
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(kMaxExamples);
  std::sort(idx.begin(), idx.end());
  data.x = data.x.Select(idx);
  if (data.labels) {
    std::vector<int> kept(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) kept[i] = (*data.labels)[idx[i]];
    data.labels = std::move(kept);
    data.gamma = LabelMean(*data.labels);
  }
}

/// Builds a dataset from a parsed table. gamma comes from the labels when a
/// label column is named, otherwise from `gamma_override`.
inline Dataset FromTable(const csv::Table& table, const std::string& name,
                         const std::optional<std::string>& label_column,
                         std::optional<double> gamma_override, std::uint64_t seed = 0) {
  std::optional<std::size_t> label_idx;
  if (label_column) {
    const auto it = std::find(table.header.begin(), table.header.end(), *label_column);
    if (it == table.header.end()) {
      internal::Fail(ErrorCode::kParseError, name + ": no column named '" + *label_column + "'");
    }
    label_idx = static_cast<std::size_t>(it - table.header.begin());
  }
  const std::size_t cols = table.header.size() - (label_idx ? 1 : 0);
  if (cols == 0) internal::Fail(ErrorCode::kParseError, name + ": no feature columns");

  Dataset data;
  data.name = name;
  data.x = Matrix(table.rows.size(), cols);
  std::vector<int> labels;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < table.rows[i].size(); ++j) {
      const double v = table.rows[i][j];
      if (label_idx && j == *label_idx) {
        if (v != 0.0 && v != 1.0) {
          internal::Fail(ErrorCode::kNonBinaryLabels,
                         name + ": row " + std::to_string(i + 1) + " has label " + csv::FormatDouble(v));
        }
        labels.push_back(static_cast<int>(v));
      } else {
        data.x(i, c++) = v;
      }
    }
  }
  if (label_idx) {
    data.labels = std::move(labels);
    data.gamma = LabelMean(*data.labels);
  } else if (gamma_override) {
    data.gamma = *gamma_override;
  } else {
    internal::Fail(ErrorCode::kMissingGamma, name + ": no label column and no gamma given");
  }
  internal::RequireGamma(data.gamma);
  Subsample(data, seed);
  return data;
}

inline Dataset LoadCsv(const std::string& path, const std::optional<std::string>& label_column,
                       std::optional<double> gamma_override, std::uint64_t seed = 0) {
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  if (const auto dot = name.rfind(".csv"); dot != std::string::npos) name = name.substr(0, dot);
  return FromTable(csv::ReadFile(path), name, label_column, gamma_override, seed);
}


// ---------------------------------------------------------------------------
// Synthetic suite

namespace internal {

/// Distance of the clustered anomalies' mean from the inlier mean, in units
/// of the inlier standard deviation.
inline constexpr double kGaussianShift = 3.5;

/// Extra spread of near-boundary anomalies, scaled by 1/sqrt(d).
inline constexpr double kSpreadInflation = 1.5;

inline std::size_t AnomalyCount(std::size_t n, double gamma) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * gamma));
}

inline std::string SuiteName(const char* family, std::size_t n, std::size_t d, double gamma) {
  return std::string(family) + "_n" + std::to_string(n) + "_d" + std::to_string(d) + "_g" +
         csv::FormatDouble(gamma);
}

/// Shuffles rows and labels together so anomalies are not contiguous.
inline Dataset Finish(std::string name, const Matrix& x, const std::vector<int>& labels,
                      std::mt19937_64& rng) {
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  Dataset data;
  data.name = std::move(name);
  data.x = x.Select(idx);
  std::vector<int> shuffled(labels.size());
  for (std::size_t i = 0; i < idx.size(); ++i) shuffled[i] = labels[idx[i]];
  data.labels = std::move(shuffled);
  data.gamma = LabelMean(*data.labels);
  return data;
}

/// Standard normal inliers; half the anomalies a unit-variance cluster
/// shifted along the diagonal, half uniform in [-6, 6]^d.
inline Dataset GaussianShifted(std::size_t n, std::size_t d, double gamma, std::mt19937_64& rng) {
  const std::size_t m = AnomalyCount(n, gamma);
  Matrix x(n, d);
  std::vector<int> labels(n, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> box(-6.0, 6.0);
  const double offset = kGaussianShift / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const bool anomaly = i < m;
    labels[i] = anomaly ? 1 : 0;
    for (std::size_t j = 0; j < d; ++j) {
      if (anomaly && i % 2 == 1) {
        x(i, j) = box(rng);
      } else {
        x(i, j) = normal(rng) + (anomaly ? offset : 0.0);
      }
    }
  }
  return Finish(SuiteName("gauss", n, d, gamma), x, labels, rng);
}

/// Three Gaussian clusters (sd 1, centres in [-5, 5]^d). Half the anomalies
/// are uniform noise over [-8, 8]^d; the other half are drawn around the
/// cluster centres with sd 1 + kSpreadInflation / sqrt(d), which keeps their
/// overlap with the inliers roughly constant across dimensions.
inline Dataset ClustersWithNoise(std::size_t n, std::size_t d, double gamma, std::mt19937_64& rng) {
  const std::size_t m = AnomalyCount(n, gamma);
  constexpr std::size_t kClusters = 3;
  std::uniform_real_distribution<double> centre(-5.0, 5.0);
  std::vector<std::vector<double>> centres(kClusters, std::vector<double>(d));
  for (auto& c : centres) {
    for (auto& v : c) v = centre(rng);
  }
  Matrix x(n, d);
  std::vector<int> labels(n, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> noise(-8.0, 8.0);
  const double spread = 1.0 + kSpreadInflation / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const bool anomaly = i < m;
    labels[i] = anomaly ? 1 : 0;
    const auto& c = centres[i % kClusters];
    for (std::size_t j = 0; j < d; ++j) {
      if (!anomaly) x(i, j) = c[j] + normal(rng);
      else if (i % 2 == 1) x(i, j) = noise(rng);
      else x(i, j) = c[j] + spread * normal(rng);
    }
  }
  return Finish(SuiteName("clusters", n, d, gamma), x, labels, rng);
}

/// Two interleaved half circles in the first two coordinates with
/// N(0, 0.1^2) jitter; extra coordinates are N(0, 0.1^2) for inliers.
/// Half the anomalies are uniform over the bounding box in every
/// coordinate; the other half sit on the moons with the jitter inflated by
/// 1 + kSpreadInflation / sqrt(d).
inline Dataset MoonsWithOutliers(std::size_t n, std::size_t d, double gamma, std::mt19937_64& rng) {
  constexpr double kPi = 3.14159265358979323846;
  constexpr double kJitter = 0.1;
  const std::size_t m = AnomalyCount(n, gamma);
  Matrix x(n, d);
  std::vector<int> labels(n, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  std::uniform_real_distribution<double> bx(-1.5, 2.5);
  std::uniform_real_distribution<double> by(-1.0, 1.5);
  std::uniform_real_distribution<double> bz(-0.6, 0.6);
  const double spread = 1.0 + kSpreadInflation / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const bool anomaly = i < m;
    labels[i] = anomaly ? 1 : 0;
    if (anomaly && i % 2 == 1) {
      x(i, 0) = bx(rng);
      if (d > 1) x(i, 1) = by(rng);
      for (std::size_t j = 2; j < d; ++j) x(i, j) = bz(rng);
      continue;
    }
    const double sd = anomaly ? kJitter * spread : kJitter;
    const double t = angle(rng);
    const bool upper = i % 4 < 2;
    const double px = upper ? std::cos(t) : 1.0 - std::cos(t);
    const double py = upper ? std::sin(t) : 0.5 - std::sin(t);
    x(i, 0) = px + sd * normal(rng);
    if (d > 1) x(i, 1) = py + sd * normal(rng);
    for (std::size_t j = 2; j < d; ++j) x(i, j) = sd * normal(rng);
  }
  return Finish(SuiteName("moons", n, d, gamma), x, labels, rng);
}

}  // namespace internal

/// Deterministic family of nine labelled datasets: three generators, each
/// at n in {500, 2000, 5000}, with d in {2, 8, 32} and gamma in
/// {0.02, 0.1, 0.3} rotated so every generator sees every value.
inline std::vector<Dataset> SyntheticSuite(std::uint64_t seed) {
  constexpr std::size_t kSizes[] = {500, 2000, 5000};
  constexpr std::size_t kDims[] = {2, 8, 32};
  constexpr double kGammas[] = {0.02, 0.1, 0.3};
  std::vector<Dataset> suite;
  for (std::size_t family = 0; family < 3; ++family) {
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t n = kSizes[j];
      const std::size_t d = kDims[(j + family) % 3];
      const double gamma = kGammas[(j + 2 * family) % 3];
      std::mt19937_64 rng(seed * 1000003ULL + family * 31ULL + j);
      switch (family) {
        case 0: suite.push_back(internal::GaussianShifted(n, d, gamma, rng)); break;
        case 1: suite.push_back(internal::ClustersWithNoise(n, d, gamma, rng)); break;
        default: suite.push_back(internal::MoonsWithOutliers(n, d, gamma, rng)); break;
      }
    }
  }
  return suite;
}

// ---------------------------------------------------------------------------
// Costs

enum class CostPreset { kQ1, kCase1, kCase2, kCase3 };

inline std::string_view ToString(CostPreset p) {
  switch (p) {
    case CostPreset::kQ1: return "q1";
    case CostPreset::kCase1: return "case1";
    case CostPreset::kCase2: return "case2";
    case CostPreset::kCase3: return "case3";
  }
  return "unknown";
}

inline std::optional<CostPreset> ParseCostPreset(std::string_view name) {
  if (name == "q1") return CostPreset::kQ1;
  if (name == "case1") return CostPreset::kCase1;
  if (name == "case2") return CostPreset::kCase2;
  if (name == "case3") return CostPreset::kCase3;
  return std::nullopt;
}

inline constexpr CostPreset kAllPresets[] = {CostPreset::kQ1, CostPreset::kCase1,
                                             CostPreset::kCase2, CostPreset::kCase3};

/// q1: (1, 1, gamma); case1: (10, 1, min{10(1-gamma), gamma});
/// case2: (1, 10, min{1-gamma, 10 gamma}); case3: (5, 5, gamma).
inline CostSpec CostsFor(CostPreset preset, double gamma) {
  switch (preset) {
    case CostPreset::kQ1: return {1.0, 1.0, gamma};
    case CostPreset::kCase1: return {10.0, 1.0, std::min(10.0 * (1.0 - gamma), gamma)};
    case CostPreset::kCase2: return {1.0, 10.0, std::min(1.0 - gamma, 10.0 * gamma)};
    case CostPreset::kCase3: return {5.0, 5.0, gamma};
  }
  return {1.0, 1.0, gamma};
}

/// Either a named preset (resolved against each dataset's gamma) or fixed costs.
struct CostChoice {
  std::optional<CostPreset> preset = CostPreset::kQ1;
  CostSpec custom;

  CostSpec Resolve(double gamma) const { return preset ? CostsFor(*preset, gamma) : custom; }
  std::string Name() const { return preset ? std::string(ToString(*preset)) : "custom"; }
};

// ---------------------------------------------------------------------------
// Trials

enum class Method { kRejEx, kNoReject, kOracle };

inline std::string_view ToString(Method m) {
  switch (m) {
    case Method::kRejEx: return "rejex";
    case Method::kNoReject: return "noreject";
    case Method::kOracle: return "oracle";
  }
  return "unknown";
}

inline constexpr Method kAllMethods[] = {Method::kRejEx, Method::kNoReject, Method::kOracle};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Fold `fold` of a seeded k-fold partition of n rows. Test folds partition
/// the rows and differ in size by at most one.
inline Split MakeSplit(std::size_t n, std::size_t folds, std::size_t fold, std::uint64_t seed) {
  if (folds < 2 || fold >= folds || n < folds) {
    rejex::internal::Fail(ErrorCode::kDomainError, "invalid fold configuration");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t begin = fold * n / folds;
  const std::size_t end = (fold + 1) * n / folds;
  Split split;
  for (std::size_t i = 0; i < n; ++i) {
    (i >= begin && i < end ? split.test : split.train).push_back(perm[i]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

struct TrialResult {
  std::string dataset;
  std::string detector;
  std::size_t fold = 0;
  Method method = Method::kRejEx;
  CostSpec costs;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t rejections = 0;
  double cost_per_example = 0.0;
  double rejection_rate = 0.0;
  double train_cost = 0.0;
  // Fold-level guarantees of the fitted constant-threshold rejector; the
  // same values are attached to every method of a fold.
  double bound_h = 0.0;
  double cost_bound = 0.0;
  double estimate_r_hat = 0.0;
  double threshold = 0.0;  // confidence threshold actually applied
  double wall_time_threshold_ms = 0.0;
};

struct Counts {
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t rejected = 0;
};

inline Counts Tally(std::span<const Decision> decisions, std::span<const int> labels) {
  Counts c;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i] == Decision::kReject) ++c.rejected;
    else if (decisions[i] == Decision::kAnomaly && labels[i] == 0) ++c.fp;
    else if (decisions[i] == Decision::kNormal && labels[i] == 1) ++c.fn;
  }
  return c;
}

struct FoldInput {
  std::vector<double> train_scores;
  std::vector<int> train_labels;
  std::vector<double> test_scores;
  std::vector<int> test_labels;
};

/// Fits the detector on the training rows and scores both sides.
inline FoldInput ScoreFold(const Dataset& data, const DetectorSpec& spec, const Split& split) {
  if (!data.labels) {
    rejex::internal::Fail(ErrorCode::kMissingGamma, data.name + ": labels are required for cost evaluation");
  }
  FoldInput in;
  const auto detector = detectors::FitDetector(spec, data.x.Select(split.train));
  in.train_scores.assign(detector.training_scores().begin(), detector.training_scores().end());
  in.test_scores = detector.Score(data.x.Select(split.test));
  for (auto i : split.train) in.train_labels.push_back((*data.labels)[i]);
  for (auto i : split.test) in.test_labels.push_back((*data.labels)[i]);
  return in;
}

/// Evaluates all three methods on one scored fold. gamma is the dataset's
/// contamination; the decision threshold is recomputed on the training fold.
inline std::vector<TrialResult> EvaluateFold(const FoldInput& in, double gamma, const CostSpec& costs,
                                             const ToleranceSpec& tol, double delta = bounds::kDefaultDelta) {
  using Clock = std::chrono::steady_clock;
  ValidateCostSpec(costs, gamma);

  const auto t0 = Clock::now();
  const FittedRejector model = Fit(ScoreSet(in.train_scores, gamma), tol, delta);
  const auto t1 = Clock::now();
  const double rejex_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  const auto t2 = Clock::now();
  const auto train_stab = TrainingStability(model);
  const double oracle_threshold = OracleThresholdFromStability(train_stab, in.train_labels, costs);
  const auto t3 = Clock::now();
  const double oracle_ms = std::chrono::duration<double, std::milli>(t3 - t2).count();

  const auto test_pred = PredictBatch(model, in.test_scores);

  const double cost_bound =
      bounds::ExpectedCostUpperBound(model.estimate.a, model.estimate.b, gamma, costs).bound;

  const std::size_t m = in.test_scores.size();
  std::vector<TrialResult> out;
  for (Method method : kAllMethods) {
    std::vector<Decision> test_dec(m);
    std::vector<Decision> train_dec(train_stab.size());
    double threshold = 0.0;
    double ms = 0.0;
    switch (method) {
      case Method::kRejEx:
        for (std::size_t i = 0; i < m; ++i) test_dec[i] = test_pred[i].decision;
        for (std::size_t i = 0; i < train_stab.size(); ++i) {
          train_dec[i] = exceed::InRejectionBand(train_stab[i].p_anomaly, tol) ? Decision::kReject
                                                                               : train_stab[i].base_label;
        }
        threshold = tol.tau();
        ms = rejex_ms;
        break;
      case Method::kNoReject:
        for (std::size_t i = 0; i < m; ++i) test_dec[i] = test_pred[i].stability.base_label;
        for (std::size_t i = 0; i < train_stab.size(); ++i) train_dec[i] = train_stab[i].base_label;
        threshold = -1.0;
        break;
      case Method::kOracle:
        for (std::size_t i = 0; i < m; ++i) test_dec[i] = DecideWithThreshold(test_pred[i].stability, oracle_threshold);
        for (std::size_t i = 0; i < train_stab.size(); ++i) train_dec[i] = DecideWithThreshold(train_stab[i], oracle_threshold);
        threshold = oracle_threshold;
        ms = oracle_ms;
        break;
    }
    const Counts c = Tally(test_dec, in.test_labels);
    TrialResult r;
    r.method = method;
    r.costs = costs;
    r.n_train = in.train_scores.size();
    r.n_test = m;
    r.false_positives = c.fp;
    r.false_negatives = c.fn;
    r.rejections = c.rejected;
    r.cost_per_example = m == 0 ? 0.0 : EmpiricalCost(test_dec, in.test_labels, costs);
    r.rejection_rate = m == 0 ? 0.0 : static_cast<double>(c.rejected) / static_cast<double>(m);
    r.train_cost = EmpiricalCost(train_dec, in.train_labels, costs);
    r.bound_h = model.band.h;
    r.cost_bound = cost_bound;
    r.estimate_r_hat = model.estimate.r_hat;
    r.threshold = threshold;
    r.wall_time_threshold_ms = ms;
    out.push_back(r);
  }
  return out;
}

/// One method on one fold: fit the detector on the training rows, set the
/// threshold, and measure the test cost.
inline TrialResult RunTrial(const Dataset& data, const DetectorSpec& spec, Method method,
                            const CostSpec& costs, const ToleranceSpec& tol, std::size_t fold,
                            std::uint64_t fold_seed, std::size_t folds = 5) {
  const Split split = MakeSplit(data.size(), folds, fold, fold_seed);
  const auto in = ScoreFold(data, spec, split);
  for (auto& r : EvaluateFold(in, data.gamma, costs, tol)) {
    if (r.method == method) {
      r.dataset = data.name;
      r.detector = std::string(detectors::ToString(spec.kind));
      r.fold = fold;
      return r;
    }
  }
  return {};
}

struct BenchConfig {
  std::vector<DetectorKind> detectors{std::begin(detectors::kAllDetectors),
                                      std::end(detectors::kAllDetectors)};
  CostChoice costs;
  double t = 32.0;
  double delta = bounds::kDefaultDelta;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
};

inline bool TrialOrder(const TrialResult& a, const TrialResult& b) {
  return std::tie(a.dataset, a.detector, a.fold, a.method) <
         std::tie(b.dataset, b.detector, b.fold, b.method);
}

/// Every dataset x detector x fold x method. Datasets that fail are reported
/// on `log` and skipped. Output is sorted by (dataset, detector, fold, method).
inline std::vector<TrialResult> RunBenchmark(const std::vector<Dataset>& datasets, const BenchConfig& cfg,
                                             std::ostream& log = std::cerr) {
  const ToleranceSpec tol(cfg.t);
  std::vector<TrialResult> results;
  for (const auto& data : datasets) {
    try {
      const CostSpec costs = ValidateCostSpec(cfg.costs.Resolve(data.gamma), data.gamma);
      std::vector<TrialResult> local;
      for (DetectorKind kind : cfg.detectors) {
        DetectorSpec spec;
        spec.kind = kind;
        spec.seed = cfg.seed;
        for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
          const Split split = MakeSplit(data.size(), cfg.folds, fold, cfg.seed);
          const auto in = ScoreFold(data, spec, split);
          for (auto& r : EvaluateFold(in, data.gamma, costs, tol, cfg.delta)) {
            r.dataset = data.name;
            r.detector = std::string(detectors::ToString(kind));
            r.fold = fold;
            local.push_back(std::move(r));
          }
        }
      }
      results.insert(results.end(), local.begin(), local.end());
    } catch (const Error& e) {
      log << "skipping dataset " << data.name << ": " << ToString(e.code()) << ": " << e.what() << "\n";
    }
  }
  std::stable_sort(results.begin(), results.end(), TrialOrder);
  return results;
}

// ---------------------------------------------------------------------------
// Aggregation

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

inline MeanStd Summarize(std::span<const double> v) {
  MeanStd s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

/// Ranks with ties averaged: {0.1, 0.2} -> {1, 2}; {0.1, 0.1} -> {1.5, 1.5}.
inline std::vector<double> AverageRanks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

struct MethodSummary {
  MeanStd cost;
  MeanStd rejection;
  double mean_rank = 0.0;
};

struct DetectorSummary {
  std::map<Method, MethodSummary> methods;
  double oracle_gap_percent = 0.0;           // (RejEx - Oracle) / Oracle
  double reduction_vs_noreject_percent = 0.0;  // (NoReject - RejEx) / NoReject
};

struct BenchmarkReport {
  std::map<std::string, DetectorSummary> per_detector;
  std::map<Method, MethodSummary> overall;
  double oracle_gap_percent = 0.0;
  double reduction_vs_noreject_percent = 0.0;
  std::size_t rejex_trials = 0;
  std::size_t rejection_bound_violations = 0;  // rejection_rate > h
  std::size_t cost_bound_violations = 0;       // cost > cost bound
  MeanStd rejex_threshold_ms;
  MeanStd oracle_threshold_ms;
  std::vector<double> ranks;  // parallel to the input results
};

inline double RelativePercent(double value, double reference) {
  return reference == 0.0 ? 0.0 : 100.0 * (value - reference) / reference;
}

/// Per-detector and overall summaries, per-trial ranks over methods, bound
/// violation counts and Oracle gaps.
inline BenchmarkReport Aggregate(std::span<const TrialResult> results) {
  if (results.empty()) rejex::internal::Fail(ErrorCode::kEmptyResults, "no trial results to aggregate");
  BenchmarkReport rep;

  using TrialKey = std::tuple<std::string, std::string, std::size_t>;
  std::map<TrialKey, std::vector<std::size_t>> trials;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    trials[{r.dataset, r.detector, r.fold}].push_back(i);
  }
  rep.ranks.assign(results.size(), 0.0);
  for (const auto& [key, idx] : trials) {
    std::vector<double> costs;
    for (auto i : idx) costs.push_back(results[i].cost_per_example);
    const auto ranks = AverageRanks(costs);
    for (std::size_t k = 0; k < idx.size(); ++k) rep.ranks[idx[k]] = ranks[k];
  }

  std::map<std::pair<std::string, Method>, std::vector<std::size_t>> by_detector;
  std::map<Method, std::vector<std::size_t>> by_method;
  std::vector<double> rejex_ms;
  std::vector<double> oracle_ms;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    by_detector[{r.detector, r.method}].push_back(i);
    by_method[r.method].push_back(i);
    if (r.method == Method::kRejEx) {
      ++rep.rejex_trials;
      if (r.rejection_rate > r.bound_h) ++rep.rejection_bound_violations;
      if (r.cost_per_example > r.cost_bound) ++rep.cost_bound_violations;
      rejex_ms.push_back(r.wall_time_threshold_ms);
    }
    if (r.method == Method::kOracle) oracle_ms.push_back(r.wall_time_threshold_ms);
  }
  auto summarize = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> cost;
    std::vector<double> rej;
    double rank = 0.0;
    for (auto i : idx) {
      cost.push_back(results[i].cost_per_example);
      rej.push_back(results[i].rejection_rate);
      rank += rep.ranks[i];
    }
    MethodSummary s;
    s.cost = Summarize(cost);
    s.rejection = Summarize(rej);
    s.mean_rank = idx.empty() ? 0.0 : rank / static_cast<double>(idx.size());
    return s;
  };
  for (const auto& [key, idx] : by_detector) rep.per_detector[key.first].methods[key.second] = summarize(idx);
  for (const auto& [method, idx] : by_method) rep.overall[method] = summarize(idx);

  auto gaps = [](const std::map<Method, MethodSummary>& m, double& oracle_gap, double& reduction) {
    const auto rj = m.find(Method::kRejEx);
    if (rj == m.end()) return;
    if (const auto o = m.find(Method::kOracle); o != m.end()) {
      oracle_gap = RelativePercent(rj->second.cost.mean, o->second.cost.mean);
    }
    if (const auto nr = m.find(Method::kNoReject); nr != m.end()) {
      reduction = -RelativePercent(rj->second.cost.mean, nr->second.cost.mean);
    }
  };
  for (auto& [name, det] : rep.per_detector) gaps(det.methods, det.oracle_gap_percent, det.reduction_vs_noreject_percent);
  gaps(rep.overall, rep.oracle_gap_percent, rep.reduction_vs_noreject_percent);
  rep.rejex_threshold_ms = Summarize(rejex_ms);
  rep.oracle_threshold_ms = Summarize(oracle_ms);
  return rep;
}

/// Per dataset, averaged over detectors and folds: estimated, empirical and
/// bounded rejection rate; empirical and bounded cost.
struct TheoryRow {
  std::string dataset;
  double r_hat = 0.0;
  double rejection_rate = 0.0;
  double bound_h = 0.0;
  double cost = 0.0;
  double cost_bound = 0.0;
  std::size_t trials = 0;
};

inline std::vector<TheoryRow> TheoryCheck(std::span<const TrialResult> results) {
  std::map<std::string, TheoryRow> rows;
  for (const auto& r : results) {
    if (r.method != Method::kRejEx) continue;
    auto& row = rows[r.dataset];
    row.dataset = r.dataset;
    row.r_hat += r.estimate_r_hat;
    row.rejection_rate += r.rejection_rate;
    row.bound_h += r.bound_h;
    row.cost += r.cost_per_example;
    row.cost_bound += r.cost_bound;
    ++row.trials;
  }
  std::vector<TheoryRow> out;
  for (auto& [name, row] : rows) {
    const double k = static_cast<double>(row.trials);
    row.r_hat /= k;
    row.rejection_rate /= k;
    row.bound_h /= k;
    row.cost /= k;
    row.cost_bound /= k;
    out.push_back(row);
  }
  return out;
}

}  // namespace rejex::bench
