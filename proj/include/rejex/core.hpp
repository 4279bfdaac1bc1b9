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
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rejex {

/// Machine-readable failure categories. Every error raised by the library
/// carries one of these so the CLI can map it onto an exit code and a JSON
/// error object.
enum class ErrorCode {
  kDomainError,
  kInvalidScoreSet,
  kInadmissibleRejectionCost,
  kDegenerateG,
  kEmptyInterval,
  kLabelLengthMismatch,
  kInsufficientData,
  kNonFiniteInput,
  kDimensionMismatch,
  kParseError,
  kMissingGamma,
  kNonBinaryLabels,
  kEmptyResults,
  kSchemaMismatch,
};

inline std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kInvalidScoreSet: return "InvalidScoreSet";
    case ErrorCode::kInadmissibleRejectionCost: return "InadmissibleRejectionCost";
    case ErrorCode::kDegenerateG: return "DegenerateG";
    case ErrorCode::kEmptyInterval: return "EmptyInterval";
    case ErrorCode::kLabelLengthMismatch: return "LabelLengthMismatch";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingGamma: return "MissingGamma";
    case ErrorCode::kNonBinaryLabels: return "NonBinaryLabels";
    case ErrorCode::kEmptyResults: return "EmptyResults";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace internal {

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void RequireGamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 0.5)) {
    Fail(ErrorCode::kDomainError, "gamma must be in [0, 0.5), got " + std::to_string(gamma));
  }
}

}  // namespace internal

/// Training anomaly scores together with the contamination factor.
///
/// The scores are kept exactly as given; a sorted copy is maintained for
/// rank queries. Immutable after construction.
class ScoreSet {
 public:
  ScoreSet(std::vector<double> scores, double gamma)
      : scores_(std::move(scores)), gamma_(gamma) {
    if (scores_.empty()) {
      internal::Fail(ErrorCode::kInvalidScoreSet, "score set must contain at least one score");
    }
    internal::RequireGamma(gamma_);
    for (std::size_t i = 0; i < scores_.size(); ++i) {
      if (!std::isfinite(scores_[i])) {
        internal::Fail(ErrorCode::kInvalidScoreSet,
                       "score at index " + std::to_string(i) + " is not finite");
      }
    }
    sorted_ = scores_;
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::span<const double> scores() const noexcept { return scores_; }
  std::span<const double> sorted() const noexcept { return sorted_; }
  std::size_t n() const noexcept { return scores_.size(); }
  double gamma() const noexcept { return gamma_; }

  /// Number of training scores at or below `s`.
  std::size_t CountAtMost(double s) const {
    return static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), s) -
                                    sorted_.begin());
  }

 private:
  std::vector<double> scores_;
  std::vector<double> sorted_;
  double gamma_;
};

/// Rejection tolerance. The tolerance epsilon = 2 e^{-T} is the stored
/// primitive and tau = 1 - epsilon is always derived from it.
class ToleranceSpec {
 public:
  static constexpr double kMinT = 4.0;
  // e^{-T} must stay a normal double, otherwise the rejection band degenerates.
  static constexpr double kMaxT = 700.0;

  explicit ToleranceSpec(double t = 32.0) : t_(t) {
    if (!std::isfinite(t_) || t_ < kMinT) {
      internal::Fail(ErrorCode::kDomainError, "T must be >= 4");
    }
    if (t_ > kMaxT) {
      internal::Fail(ErrorCode::kDomainError, "T must be <= 700");
    }
    band_low_ = std::exp(-t_);
    epsilon_ = 2.0 * band_low_;
  }

  double t() const noexcept { return t_; }
  double epsilon() const noexcept { return epsilon_; }
  double tau() const noexcept { return 1.0 - epsilon_; }

  /// Lower edge e^{-T} of the closed rejection band on P(Y=1|s).
  double band_low() const noexcept { return band_low_; }
  /// Upper edge 1 - e^{-T}.
  double band_high() const noexcept { return 1.0 - band_low_; }

 private:
  double t_;
  double band_low_;
  double epsilon_;
};

struct CostSpec {
  double c_fp = 1.0;
  double c_fn = 1.0;
  double c_r = 0.0;
};

enum class Decision { kNormal, kAnomaly, kReject };

inline std::string_view ToString(Decision d) {
  switch (d) {
    case Decision::kNormal: return "normal";
    case Decision::kAnomaly: return "anomaly";
    case Decision::kReject: return "reject";
  }
  return "unknown";
}

/// Checks the rejection cost against min{(1-gamma) c_fp, gamma c_fn}.
/// Above that cost an always-anomaly or always-normal strategy beats rejecting.
inline CostSpec ValidateCostSpec(const CostSpec& costs, double gamma) {
  internal::RequireGamma(gamma);
  if (!(costs.c_fp > 0.0) || !(costs.c_fn > 0.0) || !(costs.c_r >= 0.0) ||
      !std::isfinite(costs.c_fp) || !std::isfinite(costs.c_fn) || !std::isfinite(costs.c_r)) {
    internal::Fail(ErrorCode::kDomainError, "costs must satisfy c_fp > 0, c_fn > 0, c_r >= 0");
  }
  const double limit = std::min((1.0 - gamma) * costs.c_fp, gamma * costs.c_fn);
  if (costs.c_r > limit) {
    internal::Fail(ErrorCode::kInadmissibleRejectionCost,
                   "rejection cost " + std::to_string(costs.c_r) + " exceeds min{(1-gamma)c_fp, gamma c_fn} = " +
                       std::to_string(limit));
  }
  return costs;
}

}  // namespace rejex
