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
#include <vector>

#include "rejex/core.hpp"
#include "rejex/exceed.hpp"

/// Closed-form guarantees for the constant rejection threshold.
namespace rejex::bounds {

inline constexpr double kDefaultDelta = 0.05;

/// The training-frequency interval [t1, t2] around 1 - gamma.
///
/// `raw_t1`/`raw_t2` are the unclamped closed forms; `t1`/`t2` are clamped
/// to [0, 1]. `b1_clamped` records that the discriminant B1 came out
/// negative and was replaced by 0.
struct Interval {
  double t1 = 0.0;
  double t2 = 1.0;
  double raw_t1 = 0.0;
  double raw_t2 = 1.0;
  bool b1_clamped = false;
};

inline void RequireT(double t) {
  if (!std::isfinite(t) || t < ToleranceSpec::kMinT) {
    rejex::internal::Fail(ErrorCode::kDomainError, "T must be >= 4");
  }
}

inline void RequireDelta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    rejex::internal::Fail(ErrorCode::kDomainError, "delta must be in (0, 1)");
  }
}

/// t1 = A1 - sqrt(B1) and t2 = A2 + sqrt(B2) with
///
///   A1 = (2 + n(n+1)(1-g)) / n^2
///   B1 = [2n(-3g^2 - 2n(1-g)^2 + 4g - 3) + T(n+2)^2 - 8] / (2n^3)
///   A2 = ((2+n)(1-g) - 1) / n
///   B2 = T(n+2)^2 / (2n^3)
///
/// evaluated in powers of 1/n so that nothing of order n^3 is formed.
inline Interval ComputeInterval(std::size_t n, double gamma, double t) {
  RequireT(t);
  rejex::internal::RequireGamma(gamma);
  if (n == 0) rejex::internal::Fail(ErrorCode::kDomainError, "n must be positive");
  const double inv = 1.0 / static_cast<double>(n);
  const double keep = 1.0 - gamma;
  const double grow = 1.0 + 2.0 * inv;  // (n+2)/n

  const double a1 = keep * (1.0 + inv) + 2.0 * inv * inv;
  const double b1 = (-3.0 * gamma * gamma + 4.0 * gamma - 3.0) * inv * inv -
                    2.0 * keep * keep * inv + 0.5 * t * grow * grow * inv -
                    4.0 * inv * inv * inv;
  const double a2 = keep * grow - inv;
  const double b2 = 0.5 * t * grow * grow * inv;

  Interval out;
  out.b1_clamped = b1 < 0.0;
  out.raw_t1 = a1 - std::sqrt(std::max(b1, 0.0));
  out.raw_t2 = a2 + std::sqrt(b2);
  out.t1 = std::clamp(out.raw_t1, 0.0, 1.0);
  out.t2 = std::clamp(out.raw_t2, 0.0, 1.0);
  return out;
}

/// Checks psi in [t1, t2] => Confidence <= 1 - 2e^{-T} at a single psi.
inline bool InsideIntervalIsUnstable(std::size_t n, double gamma, double t, double psi) {
  const auto iv = ComputeInterval(n, gamma, t);
  if (psi < iv.t1 || psi > iv.t2) return true;
  const ToleranceSpec tol(t);
  return exceed::InRejectionBand(exceed::StabilityProbability(psi, n, gamma), tol);
}

/// Checks the converse established by the Hoeffding argument: outside the
/// unclamped interval the prediction is stable, i.e. P(Y=1|s) <= e^{-T}
/// below t1 and P(Y=0|s) <= e^{-T} above t2.
inline bool OutsideIntervalIsStable(std::size_t n, double gamma, double t, double psi) {
  const auto iv = ComputeInterval(n, gamma, t);
  const auto tails = exceed::ComputeTails(psi, n, gamma);
  if (psi < iv.raw_t1) return tails.log_p_anomaly <= -t;
  if (psi > iv.raw_t2) return tails.log_p_normal <= -t;
  return true;
}

/// h(n, gamma, T, delta) = t2 - t1 + 2 sqrt(ln(2/delta) / (2n)), clamped to [0, 1].
/// With probability >= 1 - delta the test rejection rate stays below h.
inline double RejectionRateUpperBound(std::size_t n, double gamma, double t, double delta) {
  RequireDelta(delta);
  const auto iv = ComputeInterval(n, gamma, t);
  const double dkw = 2.0 * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
  return std::clamp(iv.t2 - iv.t1 + dkw, 0.0, 1.0);
}

struct RejectionBandSpec {
  std::size_t n = 0;
  double gamma = 0.0;
  double t = 32.0;
  double delta = kDefaultDelta;
  double t1 = 0.0;
  double t2 = 1.0;
  double h = 1.0;
  bool b1_clamped = false;
};

inline RejectionBandSpec MakeBandSpec(std::size_t n, double gamma, double t,
                                      double delta = kDefaultDelta) {
  const auto iv = ComputeInterval(n, gamma, t);
  RejectionBandSpec band;
  band.n = n;
  band.gamma = gamma;
  band.t = t;
  band.delta = delta;
  band.t1 = iv.t1;
  band.t2 = iv.t2;
  band.b1_clamped = iv.b1_clamped;
  band.h = RejectionRateUpperBound(n, gamma, t, delta);
  return band;
}

/// In-sample training frequencies psi_n(s_i), each score ranked against the
/// full training set including itself. Returned in ascending order.
inline std::vector<double> InSampleFrequencies(const ScoreSet& train) {
  const auto sorted = train.sorted();
  const std::size_t n = sorted.size();
  std::vector<double> psi(n);
  const double inv = 1.0 / static_cast<double>(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double value = static_cast<double>(j + 1) * inv;
    for (std::size_t k = i; k <= j; ++k) psi[k] = value;
    i = j + 1;
  }
  return psi;
}

/// Empirical CDF F(u) = |{i : psi_i <= u}| / n over ascending psi values.
inline double EmpiricalCdf(std::span<const double> ascending_psi, double u) {
  const auto it = std::upper_bound(ascending_psi.begin(), ascending_psi.end(), u);
  return static_cast<double>(it - ascending_psi.begin()) /
         static_cast<double>(ascending_psi.size());
}

/// The same CDF evaluated directly on ascending scores, without building
/// the frequency vector: psi_i <= u exactly for the scores strictly below
/// the one at 0-based position m, where m is the largest count with m/n <= u.
inline double FrequencyCdf(std::span<const double> ascending_scores, double u) {
  const std::size_t n = ascending_scores.size();
  const double inv = 1.0 / static_cast<double>(n);
  auto fits = [&](std::size_t c) { return static_cast<double>(c) * inv <= u; };
  if (fits(n)) return 1.0;
  const double guess = std::floor(std::max(u, 0.0) * static_cast<double>(n));
  std::size_t m = static_cast<std::size_t>(std::min(guess, static_cast<double>(n)));
  while (m > 0 && !fits(m)) --m;
  while (m + 1 < n && fits(m + 1)) ++m;
  if (!fits(m)) return 0.0;
  const auto below = std::lower_bound(ascending_scores.begin(), ascending_scores.end(),
                                      ascending_scores[m]);
  return static_cast<double>(below - ascending_scores.begin()) / static_cast<double>(n);
}

struct RejectionEstimate {
  double a = 0.0;      // F(g^{-1}(e^{-T}))
  double b = 0.0;      // F(g^{-1}(1 - e^{-T}))
  double r_hat = 0.0;  // b - a
  double psi_low = 0.0;
  double psi_high = 0.0;
};

/// Estimate from pre-computed ascending in-sample frequencies. This is the
/// whole threshold-setting cost of the constant-threshold rejector.
inline RejectionEstimate EstimateFromFrequencies(std::span<const double> ascending_psi,
                                                 double gamma, const ToleranceSpec& tol) {
  const std::size_t n = ascending_psi.size();
  RejectionEstimate est;
  est.psi_low = exceed::GInverse(tol.band_low(), n, gamma);
  est.psi_high = exceed::GInverseByLowerTail(tol.band_low(), n, gamma);
  est.a = EmpiricalCdf(ascending_psi, est.psi_low);
  est.b = EmpiricalCdf(ascending_psi, est.psi_high);
  est.r_hat = est.b - est.a;
  return est;
}

/// A = F(g^{-1}(e^{-T})), B = F(g^{-1}(1 - e^{-T})), R_hat = B - A, with F
/// the empirical CDF of the in-sample training frequencies.
inline RejectionEstimate RejectionRateEstimate(const ScoreSet& train, const ToleranceSpec& tol) {
  const std::size_t n = train.n();
  const double gamma = train.gamma();
  RejectionEstimate est;
  est.psi_low = exceed::GInverse(tol.band_low(), n, gamma);
  est.psi_high = exceed::GInverseByLowerTail(tol.band_low(), n, gamma);
  est.a = FrequencyCdf(train.sorted(), est.psi_low);
  est.b = FrequencyCdf(train.sorted(), est.psi_high);
  est.r_hat = est.b - est.a;
  return est;
}

struct CostBound {
  double a = 0.0;
  double b = 0.0;
  double bound = 0.0;
};

/// min{gamma, A} c_fn + (1 - B) c_fp + (B - A) c_r.
inline CostBound ExpectedCostUpperBound(double a, double b, double gamma, const CostSpec& costs) {
  if (!(a >= 0.0 && b <= 1.0)) {
    rejex::internal::Fail(ErrorCode::kDomainError, "A and B must lie in [0, 1]");
  }
  if (a > b) rejex::internal::Fail(ErrorCode::kDomainError, "A must not exceed B");
  ValidateCostSpec(costs, gamma);
  CostBound out;
  out.a = a;
  out.b = b;
  out.bound = std::min(gamma, a) * costs.c_fn + (1.0 - b) * costs.c_fp + (b - a) * costs.c_r;
  return out;
}

struct ScoreInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Score range whose training frequencies fall in [t1, t2]: the smallest
/// training score with psi >= t1 and the largest with psi <= t2.
inline ScoreInterval ScoreRejectionInterval(const ScoreSet& train, double t) {
  const auto iv = ComputeInterval(train.n(), train.gamma(), t);
  const auto sorted = train.sorted();
  const auto psi = InSampleFrequencies(train);
  std::ptrdiff_t lo = -1;
  std::ptrdiff_t hi = -1;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (psi[i] >= iv.t1 && psi[i] <= iv.t2) {
      if (lo < 0) lo = static_cast<std::ptrdiff_t>(i);
      hi = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (lo < 0) {
    rejex::internal::Fail(ErrorCode::kEmptyInterval,
                          "no training score has a frequency inside [t1, t2]");
  }
  return {sorted[static_cast<std::size_t>(lo)], sorted[static_cast<std::size_t>(hi)]};
}

}  // namespace rejex::bounds
