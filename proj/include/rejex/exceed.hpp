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
#include <cstddef>
#include <cstdint>
#include <limits>

#include "rejex/core.hpp"

/// ExCeeD stability of an anomaly prediction.
///
/// For a score s with training frequency psi_n, the probability that a
/// detector retrained on a perturbed sample labels s anomalous is the upper
/// binomial tail
///
///   P(Y=1|s) = sum_{i=n-a+1}^{n} C(n,i) q^i (1-q)^{n-i},
///   q = (1 + n psi_n) / (2 + n),  a = floor(n gamma),
///
/// which we call g(psi_n). All tails are evaluated in log space through the
/// regularized incomplete beta function, so n in the tens of thousands and
/// probabilities far below 1e-300 are handled.
namespace rejex::exceed {

/// Tolerance used when turning n * gamma into an integer count, so that
/// products such as 100 * 0.29 = 28.999999999999996 round as intended.
inline constexpr double kCountSlack = 1e-9;

/// a = floor(n gamma): number of anomaly ranks summed in the tail.
inline std::size_t AnomalyRanks(std::size_t n, double gamma) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * gamma + kCountSlack));
}

/// ceil(n gamma): rank of the decision threshold among the largest scores.
inline std::size_t ThresholdRank(std::size_t n, double gamma) {
  const double x = static_cast<double>(n) * gamma - kCountSlack;
  return x <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(x));
}

namespace internal {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Stirling-series remainder lgamma(n + 1) - (n + 1/2) log n + n - log sqrt(2 pi).
inline double StirlingError(double n) {
  constexpr double kS0 = 1.0 / 12.0;
  constexpr double kS1 = 1.0 / 360.0;
  constexpr double kS2 = 1.0 / 1260.0;
  constexpr double kS3 = 1.0 / 1680.0;
  constexpr double kS4 = 1.0 / 1188.0;
  constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;
  if (n <= 15.0) return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n - kLogSqrt2Pi;
  const double nn = n * n;
  if (n > 500.0) return (kS0 - kS1 / nn) / n;
  if (n > 80.0) return (kS0 - (kS1 - kS2 / nn) / nn) / n;
  if (n > 35.0) return (kS0 - (kS1 - (kS2 - kS3 / nn) / nn) / nn) / n;
  return (kS0 - (kS1 - (kS2 - (kS3 - kS4 / nn) / nn) / nn) / nn) / n;
}

/// Deviance term x log(x / m) + m - x, series form when x is close to m.
inline double Deviance(double x, double m) {
  if (std::abs(x - m) < 0.1 * (x + m)) {
    double v = (x - m) / (x + m);
    double s = (x - m) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double next = s + ej / (2 * j + 1);
      if (next == s) return next;
      s = next;
    }
    return s;
  }
  return x * std::log(x / m) + m - x;
}

/// log C(n,k) q^k (1-q)^(n-k), in saddle-point form so that no large
/// lgamma values cancel.
inline double LogBinomialPmf(std::size_t n, std::size_t k, double q, double q_complement) {
  const double dn = static_cast<double>(n);
  const double dk = static_cast<double>(k);
  if (k == 0) return dn * std::log(q_complement);
  if (k == n) return dn * std::log(q);
  const double rest = dn - dk;
  constexpr double kLog2Pi = 1.837877066409345483560659472811;
  return StirlingError(dn) - StirlingError(dk) - StirlingError(rest) - Deviance(dk, dn * q) -
         Deviance(rest, dn * q_complement) +
         0.5 * (std::log(dn) - std::log(dk) - std::log(rest) - kLog2Pi);
}

/// log(exp(x) + exp(y)) without overflow.
inline double LogAddExp(double x, double y) {
  if (x == kNegInf) return y;
  if (y == kNegInf) return x;
  const double m = std::max(x, y);
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

struct ContinuedFraction {
  double value = 0.0;
  double error = 1.0;  // |delta - 1| of the last Lentz step
};

/// Continued fraction of I_x(a, b), modified Lentz. `y` is 1 - x, passed
/// separately so callers keep full precision in both.
inline ContinuedFraction BetaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIterations = 20000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  ContinuedFraction out;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double dm = m;
    const double m2 = 2.0 * dm;
    double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    out.error = std::abs(del - 1.0);
    if (out.error < kEps) break;
  }
  out.value = h;
  return out;
}

/// Neumaier-compensated log-space summation of the tail terms
/// C(n,i) q^i (1-q)^{n-i}, i = k..n.
inline double LogTailBySummation(std::size_t n, std::size_t k, double q, double q_complement) {
  double max_term = kNegInf;
  for (std::size_t i = k; i <= n; ++i) {
    const double t = LogBinomialPmf(n, i, q, q_complement);
    max_term = std::max(max_term, t);
  }
  if (max_term == kNegInf) return kNegInf;
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t i = k; i <= n; ++i) {
    const double t = std::exp(LogBinomialPmf(n, i, q, q_complement) - max_term);
    const double next = sum + t;
    if (std::abs(sum) >= std::abs(t)) {
      comp += (sum - next) + t;
    } else {
      comp += (t - next) + sum;
    }
    sum = next;
  }
  return max_term + std::log(sum + comp);
}

inline constexpr double kCertifiedError = 1e-12;

}  // namespace internal

/// log P(X >= k) for X ~ Binomial(n, q). `q_complement` must equal 1 - q and
/// is taken separately so that tails near q = 1 stay accurate.
///
/// Uses P(X >= k) = I_q(k, n - k + 1). Falls back to direct log-space
/// summation when the continued fraction does not certify 1e-12.
inline double LogBinomialUpperTail(std::size_t n, std::size_t k, double q, double q_complement) {
  using internal::kNegInf;
  if (k == 0) return 0.0;
  if (k > n) return kNegInf;
  if (q <= 0.0) return kNegInf;
  if (q_complement <= 0.0) return 0.0;

  const double a = static_cast<double>(k);
  const double b = static_cast<double>(n - k + 1);
  const double log_1mq = std::log(q_complement);

  // x^a (1-x)^b / (a B(a,b)) with a = k, b = n-k+1 equals C(n,k) q^k (1-q)^(n-k+1),
  // since 1 / B(k, n-k+1) = k C(n,k).
  const double log_front = internal::LogBinomialPmf(n, k, q, q_complement) + log_1mq;

  if (q < (a + 1.0) / (a + b + 2.0)) {
    const auto cf = internal::BetaContinuedFraction(a, b, q);
    if (cf.error <= internal::kCertifiedError && cf.value > 0.0) {
      return log_front + std::log(cf.value);
    }
  } else {
    // I_q(a,b) = 1 - I_{1-q}(b,a)
    const auto cf = internal::BetaContinuedFraction(b, a, q_complement);
    if (cf.error <= internal::kCertifiedError && cf.value > 0.0) {
      const double log_other = log_front + std::log(a) - std::log(b) + std::log(cf.value);
      const double other = std::exp(log_other);
      if (other < 1.0) return std::log1p(-other);
    }
  }
  return internal::LogTailBySummation(n, k, q, q_complement);
}

/// Both halves of the binomial mass behind the stability estimate.
struct StabilityTails {
  double log_p_anomaly = internal::kNegInf;  // log P(Y=1|s)
  double log_p_normal = 0.0;                 // log P(Y=0|s)

  double p_anomaly() const { return std::exp(log_p_anomaly); }
  double p_normal() const { return std::exp(log_p_normal); }
};

inline void RequirePsi(double psi_n) {
  if (!(psi_n >= 0.0 && psi_n <= 1.0)) {
    rejex::internal::Fail(ErrorCode::kDomainError,
                          "psi_n must be in [0, 1], got " + std::to_string(psi_n));
  }
}

/// Upper tail P(Y=1|s) and lower tail P(Y=0|s) at training frequency psi_n.
/// The lower tail sums i = 0..n-a, so the two partition the binomial mass.
inline StabilityTails ComputeTails(double psi_n, std::size_t n, double gamma) {
  RequirePsi(psi_n);
  rejex::internal::RequireGamma(gamma);
  if (n == 0) rejex::internal::Fail(ErrorCode::kDomainError, "n must be positive");
  StabilityTails tails;
  const std::size_t a = AnomalyRanks(n, gamma);
  if (a == 0) return tails;
  const double dn = static_cast<double>(n);
  const double q = (1.0 + dn * psi_n) / (2.0 + dn);
  const double q_complement = (dn * (1.0 - psi_n) + 1.0) / (2.0 + dn);
  tails.log_p_anomaly = LogBinomialUpperTail(n, n - a + 1, q, q_complement);
  // X <= n - a  <=>  n - X >= a, with n - X ~ Binomial(n, 1 - q).
  tails.log_p_normal = LogBinomialUpperTail(n, a, q_complement, q);
  return tails;
}

/// P(Y=1|s) = g(psi_n). Returns 0 when floor(n gamma) = 0 (empty sum).
inline double StabilityProbability(double psi_n, std::size_t n, double gamma) {
  return ComputeTails(psi_n, n, gamma).p_anomaly();
}

/// P(Y=0|s), summed directly rather than as 1 - g.
inline double LowerTailProbability(double psi_n, std::size_t n, double gamma) {
  return ComputeTails(psi_n, n, gamma).p_normal();
}

/// |{i : s_i <= s}| / n, ties inclusive.
inline double TrainingFrequency(const ScoreSet& train, double s) {
  if (!std::isfinite(s)) {
    rejex::internal::Fail(ErrorCode::kNonFiniteInput, "score must be finite");
  }
  return static_cast<double>(train.CountAtMost(s)) / static_cast<double>(train.n());
}

/// Margin confidence |2p - 1|.
inline double Confidence(double p_anomaly) { return std::abs(2.0 * p_anomaly - 1.0); }

/// True iff p lies in the closed band [e^{-T}, 1 - e^{-T}], which is the
/// same event as Confidence(p) <= tau, tested without forming tau.
inline bool InRejectionBand(double p_anomaly, const ToleranceSpec& tol) {
  if (!(p_anomaly >= 0.0 && p_anomaly <= 1.0)) {
    rejex::internal::Fail(ErrorCode::kDomainError, "probability must be in [0, 1]");
  }
  return p_anomaly >= tol.band_low() && p_anomaly <= tol.band_high();
}

struct StabilityResult {
  double psi_n = 0.0;
  double p_anomaly = 0.0;
  double confidence = 1.0;
  Decision base_label = Decision::kNormal;
};

inline StabilityResult Evaluate(double psi_n, std::size_t n, double gamma, Decision base_label) {
  StabilityResult r;
  r.psi_n = psi_n;
  r.p_anomaly = StabilityProbability(psi_n, n, gamma);
  r.confidence = Confidence(r.p_anomaly);
  r.base_label = base_label;
  return r;
}

namespace internal {

inline constexpr int kMaxBisection = 200;
inline constexpr double kPsiTolerance = 1e-12;
inline constexpr double kLogDomainBelow = 1e-8;

/// Smallest psi in [0,1] for which `reached(psi)` holds, where `reached` is
/// monotone (false then true). Assumes reached(1) and !reached(0).
template <typename Pred>
double BisectMonotone(Pred reached) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < kMaxBisection && hi - lo > kPsiTolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (reached(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

inline void RequireNonDegenerate(std::size_t n, double gamma) {
  if (AnomalyRanks(n, gamma) == 0) {
    rejex::internal::Fail(ErrorCode::kDegenerateG,
                          "floor(n * gamma) = 0: g is identically zero and has no inverse");
  }
}

}  // namespace internal

/// inf{psi in [0,1] : P(Y=0|psi) <= tail_mass}, i.e. g^{-1}(1 - tail_mass)
/// resolved on the lower tail. Used for the upper band edge 1 - e^{-T},
/// where forming 1 - e^{-T} would throw away most significant digits.
inline double GInverseByLowerTail(double tail_mass, std::size_t n, double gamma) {
  if (!(tail_mass >= 0.0 && tail_mass <= 1.0)) {
    rejex::internal::Fail(ErrorCode::kDomainError, "tail mass must be in [0, 1]");
  }
  internal::RequireNonDegenerate(n, gamma);
  auto lower = [&](double psi) { return ComputeTails(psi, n, gamma).log_p_normal; };
  const double log_target = std::log(tail_mass);
  if (lower(0.0) <= log_target) return 0.0;
  if (lower(1.0) > log_target) return 1.0;
  if (tail_mass < internal::kLogDomainBelow) {
    return internal::BisectMonotone([&](double psi) { return lower(psi) <= log_target; });
  }
  return internal::BisectMonotone(
      [&](double psi) { return ComputeTails(psi, n, gamma).p_normal() <= tail_mass; });
}

/// psi* = inf{psi in [0,1] : g(psi) >= target}. Returns 0 if target <= g(0)
/// and 1 if target > g(1).
inline double GInverse(double target_p, std::size_t n, double gamma) {
  if (!(target_p >= 0.0 && target_p <= 1.0)) {
    rejex::internal::Fail(ErrorCode::kDomainError, "target probability must be in [0, 1]");
  }
  internal::RequireNonDegenerate(n, gamma);
  if (target_p > 0.5) {
    // 1 - target is exact for target in [0.5, 1].
    return GInverseByLowerTail(1.0 - target_p, n, gamma);
  }
  auto upper = [&](double psi) { return ComputeTails(psi, n, gamma).log_p_anomaly; };
  const double log_target = std::log(target_p);
  if (log_target <= upper(0.0)) return 0.0;
  if (log_target > upper(1.0)) return 1.0;
  if (target_p < internal::kLogDomainBelow) {
    return internal::BisectMonotone([&](double psi) { return upper(psi) >= log_target; });
  }
  return internal::BisectMonotone(
      [&](double psi) { return ComputeTails(psi, n, gamma).p_anomaly() >= target_p; });
}

}  // namespace rejex::exceed
