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
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rejex/core.hpp"

/// Small unsupervised anomaly scorers sharing one interface. Higher scores
/// mean more anomalous. The rejector only ever sees the scores, so any
/// external detector can stand in for these through score files.
namespace rejex::detectors {

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      rejex::internal::Fail(ErrorCode::kDimensionMismatch, "matrix data does not match its shape");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  std::span<const double> data() const noexcept { return data_; }

  /// Rows `indices` in order.
  Matrix Select(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t r = 0; r < indices.size(); ++r) {
      std::copy_n(row(indices[r]).begin(), cols_, out.row(r).begin());
    }
    return out;
  }

  /// One-column matrix from a vector.
  static Matrix Column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class DetectorKind { kKnnDist, kLof, kIForest, kHbos };

inline std::string_view ToString(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kKnnDist: return "knn";
    case DetectorKind::kLof: return "lof";
    case DetectorKind::kIForest: return "iforest";
    case DetectorKind::kHbos: return "hbos";
  }
  return "unknown";
}

inline std::optional<DetectorKind> ParseDetectorKind(std::string_view name) {
  if (name == "knn") return DetectorKind::kKnnDist;
  if (name == "lof") return DetectorKind::kLof;
  if (name == "iforest") return DetectorKind::kIForest;
  if (name == "hbos") return DetectorKind::kHbos;
  return std::nullopt;
}

struct DetectorSpec {
  DetectorKind kind = DetectorKind::kKnnDist;
  std::size_t k = 10;           // KnnDist, Lof
  std::size_t trees = 100;      // IForest
  std::size_t subsample = 256;  // IForest
  std::size_t bins = 10;        // Hbos
  std::uint64_t seed = 0;       // IForest only
};

inline constexpr DetectorKind kAllDetectors[] = {DetectorKind::kKnnDist, DetectorKind::kLof,
                                                 DetectorKind::kIForest, DetectorKind::kHbos};

namespace internal {

inline double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    sum += d * d;
  }
  return sum;
}

/// Position of every row in lexicographic row order. Used to break distance
/// ties and to drive subsampling so results do not depend on row order.
inline std::vector<std::size_t> CanonicalRanks(const Matrix& x) {
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = x.row(a);
    const auto rb = x.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  std::vector<std::size_t> rank(x.rows());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

struct Neighbor {
  double distance;
  std::size_t index;
};

/// The k nearest training rows to `query`, skipping `exclude` (pass
/// train.rows() to skip nothing). Sorted by distance, then canonical rank.
inline std::vector<Neighbor> NearestNeighbors(const Matrix& train, std::span<const std::size_t> rank,
                                              std::span<const double> query, std::size_t k,
                                              std::size_t exclude) {
  std::vector<Neighbor> all;
  all.reserve(train.rows());
  for (std::size_t i = 0; i < train.rows(); ++i) {
    if (i == exclude) continue;
    all.push_back({SquaredDistance(train.row(i), query), i});
  }
  auto closer = [&](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return rank[a.index] < rank[b.index];
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
  all.resize(k);
  for (auto& nb : all) nb.distance = std::sqrt(nb.distance);
  return all;
}

struct IsolationNode {
  std::size_t feature = 0;
  double split = 0.0;
  std::int32_t left = -1;  // -1 marks a leaf
  std::int32_t right = -1;
  std::size_t size = 0;
};

using IsolationTree = std::vector<IsolationNode>;

/// Average path length of an unsuccessful BST search over n points.
inline double AveragePathLength(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  constexpr double kEulerGamma = 0.5772156649015329;
  const double dn = static_cast<double>(n);
  return 2.0 * (std::log(dn - 1.0) + kEulerGamma) - 2.0 * (dn - 1.0) / dn;
}

inline std::int32_t BuildIsolationNode(const Matrix& x, std::vector<std::size_t>& idx,
                                       std::size_t begin, std::size_t end, std::size_t depth,
                                       std::size_t max_depth, std::mt19937_64& rng,
                                       IsolationTree& tree) {
  const auto node_id = static_cast<std::int32_t>(tree.size());
  tree.push_back({});
  tree[node_id].size = end - begin;
  if (depth >= max_depth || end - begin <= 1) return node_id;

  std::vector<std::size_t> splittable;
  std::vector<std::pair<double, double>> ranges(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double lo = x(idx[begin], j);
    double hi = lo;
    for (std::size_t r = begin + 1; r < end; ++r) {
      lo = std::min(lo, x(idx[r], j));
      hi = std::max(hi, x(idx[r], j));
    }
    ranges[j] = {lo, hi};
    if (hi > lo) splittable.push_back(j);
  }
  if (splittable.empty()) return node_id;

  std::uniform_int_distribution<std::size_t> pick(0, splittable.size() - 1);
  const std::size_t feature = splittable[pick(rng)];
  const auto [lo, hi] = ranges[feature];
  std::uniform_real_distribution<double> cut(lo, hi);
  double split = cut(rng);
  if (!(split > lo)) split = std::nextafter(lo, hi);

  const auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                     idx.begin() + static_cast<std::ptrdiff_t>(end),
                                     [&](std::size_t r) { return x(r, feature) < split; });
  const auto mid = static_cast<std::size_t>(mid_it - idx.begin());

  tree[node_id].feature = feature;
  tree[node_id].split = split;
  const auto left = BuildIsolationNode(x, idx, begin, mid, depth + 1, max_depth, rng, tree);
  const auto right = BuildIsolationNode(x, idx, mid, end, depth + 1, max_depth, rng, tree);
  tree[node_id].left = left;
  tree[node_id].right = right;
  return node_id;
}

inline double PathLength(const IsolationTree& tree, std::span<const double> point) {
  std::int32_t node = 0;
  double depth = 0.0;
  while (tree[node].left >= 0) {
    node = point[tree[node].feature] < tree[node].split ? tree[node].left : tree[node].right;
    depth += 1.0;
  }
  return depth + AveragePathLength(tree[node].size);
}

struct Histogram {
  double min = 0.0;
  double max = 0.0;
  std::vector<double> log_density;  // per bin, Laplace smoothed
  double log_empty = 0.0;           // density of a value outside [min, max]
};

inline double HistogramNegLogDensity(const Histogram& h, double v) {
  if (v < h.min || v > h.max) return -h.log_empty;
  const std::size_t bins = h.log_density.size();
  if (h.max == h.min) return -h.log_density[0];
  const double width = (h.max - h.min) / static_cast<double>(bins);
  auto b = static_cast<std::size_t>((v - h.min) / width);
  if (b >= bins) b = bins - 1;
  return -h.log_density[b];
}

}  // namespace internal

/// A detector fitted on a training matrix. Scoring is const and reentrant.
class FittedDetector {
 public:
  FittedDetector(const DetectorSpec& spec, Matrix train) : spec_(spec), train_(std::move(train)) {
    Validate();
    rank_ = internal::CanonicalRanks(train_);
    switch (spec_.kind) {
      case DetectorKind::kKnnDist: FitKnn(); break;
      case DetectorKind::kLof: FitLof(); break;
      case DetectorKind::kIForest: FitIForest(); break;
      case DetectorKind::kHbos: FitHbos(); break;
    }
  }

  const DetectorSpec& spec() const noexcept { return spec_; }
  const Matrix& train() const noexcept { return train_; }
  std::size_t dims() const noexcept { return train_.cols(); }

  /// Scores of the training rows. Neighbour-based detectors leave each row
  /// out of its own neighbourhood, as when scoring an unseen point.
  std::span<const double> training_scores() const noexcept { return train_scores_; }

  std::vector<double> Score(const Matrix& x) const {
    if (x.cols() != train_.cols()) {
      rejex::internal::Fail(ErrorCode::kDimensionMismatch,
                            "expected " + std::to_string(train_.cols()) + " features, got " +
                                std::to_string(x.cols()));
    }
    RequireFinite(x);
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = ScoreRow(x.row(i), train_.rows());
    return out;
  }

 private:
  static void RequireFinite(const Matrix& x) {
    for (double v : x.data()) {
      if (!std::isfinite(v)) rejex::internal::Fail(ErrorCode::kNonFiniteInput, "non-finite feature value");
    }
  }

  void Validate() const {
    if (train_.cols() == 0) rejex::internal::Fail(ErrorCode::kInsufficientData, "need at least one feature");
    std::size_t min_rows = 2;
    if (spec_.kind == DetectorKind::kKnnDist || spec_.kind == DetectorKind::kLof) {
      if (spec_.k < 1) rejex::internal::Fail(ErrorCode::kDomainError, "k must be >= 1");
      min_rows = std::max<std::size_t>(2, spec_.k + 1);
    }
    if (spec_.kind == DetectorKind::kIForest && (spec_.trees < 1 || spec_.subsample < 2)) {
      rejex::internal::Fail(ErrorCode::kDomainError, "need trees >= 1 and subsample >= 2");
    }
    if (spec_.kind == DetectorKind::kHbos && spec_.bins < 1) {
      rejex::internal::Fail(ErrorCode::kDomainError, "bins must be >= 1");
    }
    if (train_.rows() < min_rows) {
      rejex::internal::Fail(ErrorCode::kInsufficientData,
                            "need at least " + std::to_string(min_rows) + " training rows");
    }
    RequireFinite(train_);
  }

  // `exclude` is the training row being scored in-sample, or rows() if none.
  double ScoreRow(std::span<const double> x, std::size_t exclude) const {
    switch (spec_.kind) {
      case DetectorKind::kKnnDist:
        return internal::NearestNeighbors(train_, rank_, x, spec_.k, exclude).back().distance;
      case DetectorKind::kLof: {
        const auto nbrs = internal::NearestNeighbors(train_, rank_, x, spec_.k, exclude);
        double reach = 0.0;
        double neighbor_lrd = 0.0;
        for (const auto& nb : nbrs) {
          reach += std::max(k_distance_[nb.index], nb.distance);
          neighbor_lrd += lrd_[nb.index];
        }
        const double k = static_cast<double>(nbrs.size());
        const double own_lrd = 1.0 / (reach / k + kLrdFloor);
        return (neighbor_lrd / k) / own_lrd;
      }
      case DetectorKind::kIForest: {
        double total = 0.0;
        for (const auto& tree : trees_) total += internal::PathLength(tree, x);
        const double mean = total / static_cast<double>(trees_.size());
        return std::exp2(-mean / iforest_norm_);
      }
      case DetectorKind::kHbos: {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += internal::HistogramNegLogDensity(histograms_[j], x[j]);
        return s;
      }
    }
    return 0.0;
  }

  void FitKnn() {
    train_scores_.resize(train_.rows());
    for (std::size_t i = 0; i < train_.rows(); ++i) train_scores_[i] = ScoreRow(train_.row(i), i);
  }

  void FitLof() {
    const std::size_t n = train_.rows();
    std::vector<std::vector<internal::Neighbor>> nbrs(n);
    k_distance_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      nbrs[i] = internal::NearestNeighbors(train_, rank_, train_.row(i), spec_.k, i);
      k_distance_[i] = nbrs[i].back().distance;
    }
    lrd_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double reach = 0.0;
      for (const auto& nb : nbrs[i]) reach += std::max(k_distance_[nb.index], nb.distance);
      lrd_[i] = 1.0 / (reach / static_cast<double>(spec_.k) + kLrdFloor);
    }
    train_scores_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double neighbor_lrd = 0.0;
      for (const auto& nb : nbrs[i]) neighbor_lrd += lrd_[nb.index];
      train_scores_[i] = (neighbor_lrd / static_cast<double>(spec_.k)) / lrd_[i];
    }
  }

  void FitIForest() {
    const std::size_t n = train_.rows();
    const std::size_t sample = std::min(spec_.subsample, n);
    const auto max_depth = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(sample))));
    iforest_norm_ = internal::AveragePathLength(sample);

    // Rows in canonical order, so the subsample does not depend on input order.
    std::vector<std::size_t> canonical(n);
    for (std::size_t i = 0; i < n; ++i) canonical[rank_[i]] = i;

    std::mt19937_64 rng(spec_.seed);
    trees_.reserve(spec_.trees);
    std::vector<std::size_t> pool = canonical;
    for (std::size_t t = 0; t < spec_.trees; ++t) {
      pool = canonical;
      for (std::size_t i = 0; i < sample; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      std::vector<std::size_t> idx(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(sample));
      internal::IsolationTree tree;
      internal::BuildIsolationNode(train_, idx, 0, sample, 0, max_depth, rng, tree);
      trees_.push_back(std::move(tree));
    }
    train_scores_.resize(n);
    for (std::size_t i = 0; i < n; ++i) train_scores_[i] = ScoreRow(train_.row(i), n);
  }

  void FitHbos() {
    const std::size_t n = train_.rows();
    const std::size_t bins = spec_.bins;
    const double denom = static_cast<double>(n + bins);
    histograms_.resize(train_.cols());
    for (std::size_t j = 0; j < train_.cols(); ++j) {
      auto& h = histograms_[j];
      h.min = train_(0, j);
      h.max = h.min;
      for (std::size_t i = 1; i < n; ++i) {
        h.min = std::min(h.min, train_(i, j));
        h.max = std::max(h.max, train_(i, j));
      }
      std::vector<double> counts(bins, 0.0);
      const double width = (h.max - h.min) / static_cast<double>(bins);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t b = 0;
        if (h.max > h.min) {
          b = static_cast<std::size_t>((train_(i, j) - h.min) / width);
          if (b >= bins) b = bins - 1;
        }
        counts[b] += 1.0;
      }
      h.log_density.resize(bins);
      for (std::size_t b = 0; b < bins; ++b) h.log_density[b] = std::log((counts[b] + 1.0) / denom);
      h.log_empty = std::log(1.0 / denom);
    }
    train_scores_.resize(n);
    for (std::size_t i = 0; i < n; ++i) train_scores_[i] = ScoreRow(train_.row(i), n);
  }

  static constexpr double kLrdFloor = 1e-10;

  DetectorSpec spec_;
  Matrix train_;
  std::vector<std::size_t> rank_;
  std::vector<double> train_scores_;
  // Lof
  std::vector<double> k_distance_;
  std::vector<double> lrd_;
  // IForest
  std::vector<internal::IsolationTree> trees_;
  double iforest_norm_ = 1.0;
  // Hbos
  std::vector<internal::Histogram> histograms_;
};

inline FittedDetector FitDetector(const DetectorSpec& spec, Matrix x) {
  return FittedDetector(spec, std::move(x));
}

}  // namespace rejex::detectors
