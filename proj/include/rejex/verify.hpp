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
#include <cfloat>
#include <iterator>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rejex/bench.hpp"
#include "rejex/bounds.hpp"
#include "rejex/core.hpp"
#include "rejex/exact_oracle.hpp"
#include "rejex/exceed.hpp"
#include "rejex/rejector.hpp"

/// Property sweeps over the theoretical guarantees. Each check returns a
/// pass/fail outcome with a one-line detail and the first violating tuple.
namespace rejex::verify {

struct Outcome {
  explicit Outcome(std::string label) : name(std::move(label)) {}

  std::string name;
  bool passed = true;
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::string detail;
  std::string first_violation;
};

struct GridConfig {
  std::vector<std::size_t> n_values{100, 1000, 10000};
  std::vector<double> gammas{0.02, 0.1, 0.3};
  std::vector<double> t_values{4, 8, 16, 32};
  std::size_t psi_samples = 1000;
  std::size_t exact_max_n = 200;
  std::size_t trials = 200;
  std::size_t estimator_trials = 50;
  double delta = bounds::kDefaultDelta;
  std::uint64_t seed = 0;
};

namespace internal {

inline std::string Tuple(std::size_t n, double gamma, double t, double psi) {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << n << " gamma=" << gamma << " T=" << t << " psi=" << psi;
  return os.str();
}

inline void Record(Outcome& out, bool ok, const std::string& where) {
  ++out.checked;
  if (ok) return;
  ++out.violations;
  if (out.first_violation.empty()) out.first_violation = where;
}

inline std::vector<double> StandardNormal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

}  // namespace internal

/// Fast tail vs. exact rational summation, n = 1..max_n,
/// gamma in {0.01, 0.05, 0.1, 0.2, 0.3, 0.49}, psi in {0, 0.1, ..., 1}.
/// Relative error <= 1e-10. Exact values below the smallest normal double
/// are compared through their logarithms, which measures the same relative
/// error without the subnormal rounding of the final exp.
inline Outcome ExactOracleAgreement(std::size_t max_n = 200, double tolerance = 1e-10) {
  Outcome out{"exact-oracle agreement (stability probability)"};
  constexpr std::int64_t kGammaPercent[] = {1, 5, 10, 20, 30, 49};
  double worst = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    for (auto g : kGammaPercent) {
      for (std::int64_t k = 0; k <= 10; ++k) {
        const auto exact_p = exact::StabilityProbability(n, {k, 10}, {g, 100});
        const auto tails = exceed::ComputeTails(static_cast<double>(k) / 10.0, n, static_cast<double>(g) / 100.0);
        double rel = 0.0;
        if (exact_p == 0) {
          rel = tails.log_p_anomaly == -INFINITY ? 0.0 : 1.0;
        } else if (exact_p < DBL_MIN) {
          rel = std::abs(std::expm1(tails.log_p_anomaly - exact::Log(exact_p)));
        } else {
          rel = exact::RelativeError(tails.p_anomaly(), exact_p);
        }
        worst = std::max(worst, rel);
        internal::Record(out, rel <= tolerance,
                         internal::Tuple(n, static_cast<double>(g) / 100.0, 0, static_cast<double>(k) / 10.0));
      }
    }
  }
  out.passed = out.violations == 0;
  std::ostringstream os;
  os << "worst relative error " << worst << " (tolerance " << tolerance << ")";
  out.detail = os.str();
  return out;
}

/// psi in [t1, t2] => confidence <= 1 - 2e^{-T}, checked on `psi_samples`
/// evenly spaced points of every band.
inline Outcome IntervalImplication(const GridConfig& cfg) {
  Outcome out{"interval: psi in [t1,t2] implies confidence <= tau"};
  for (auto n : cfg.n_values) {
    for (auto gamma : cfg.gammas) {
      for (auto t : cfg.t_values) {
        const auto iv = bounds::ComputeInterval(n, gamma, t);
        const ToleranceSpec tol(t);
        for (std::size_t s = 0; s < cfg.psi_samples; ++s) {
          const double psi =
              cfg.psi_samples == 1
                  ? iv.t1
                  : std::min(iv.t2, iv.t1 + (iv.t2 - iv.t1) * static_cast<double>(s) /
                                                static_cast<double>(cfg.psi_samples - 1));
          const bool ok = exceed::InRejectionBand(exceed::StabilityProbability(psi, n, gamma), tol);
          internal::Record(out, ok, internal::Tuple(n, gamma, t, psi));
        }
      }
    }
  }
  out.passed = out.violations == 0;
  out.detail = std::to_string(out.violations) + " of " + std::to_string(out.checked) + " samples violate";
  return out;
}

/// The converse shown by the Hoeffding argument: below t1, P(Y=1|s) <= e^{-T};
/// above t2, P(Y=0|s) <= e^{-T}. Checked at the band edges, where the
/// binomial tails are largest, on the unclamped interval.
inline Outcome IntervalConverse(const GridConfig& cfg) {
  Outcome out{"interval converse: outside [t1,t2] confidence >= tau"};
  for (auto n : cfg.n_values) {
    for (auto gamma : cfg.gammas) {
      for (auto t : cfg.t_values) {
        const auto iv = bounds::ComputeInterval(n, gamma, t);
        if (iv.raw_t1 >= 0.0) {
          const auto tails = exceed::ComputeTails(std::min(iv.raw_t1, 1.0), n, gamma);
          internal::Record(out, tails.log_p_anomaly <= -t, internal::Tuple(n, gamma, t, iv.raw_t1));
        }
        if (iv.raw_t2 <= 1.0) {
          const auto tails = exceed::ComputeTails(std::max(iv.raw_t2, 0.0), n, gamma);
          internal::Record(out, tails.log_p_normal <= -t, internal::Tuple(n, gamma, t, iv.raw_t2));
        }
      }
    }
  }
  out.passed = out.violations == 0;
  out.detail = std::to_string(out.violations) + " of " + std::to_string(out.checked) + " band edges violate";
  return out;
}

/// t1 <= 1-gamma <= t2, and (t1 non-increasing, t2 non-decreasing in T)
/// at every grid point; B1 clamping is reported.
inline Outcome IntervalShape(const GridConfig& cfg) {
  Outcome out{"interval shape: contains 1-gamma, monotone in T"};
  std::size_t clamped = 0;
  for (auto n : cfg.n_values) {
    for (auto gamma : cfg.gammas) {
      double prev_t1 = INFINITY;
      double prev_t2 = -INFINITY;
      auto ts = cfg.t_values;
      std::sort(ts.begin(), ts.end());
      for (auto t : ts) {
        const auto iv = bounds::ComputeInterval(n, gamma, t);
        if (iv.b1_clamped) ++clamped;
        internal::Record(out, iv.t1 <= 1.0 - gamma && 1.0 - gamma <= iv.t2,
                         "contains " + internal::Tuple(n, gamma, t, 1.0 - gamma));
        internal::Record(out, iv.t1 <= prev_t1 && iv.t2 >= prev_t2, "monotone " + internal::Tuple(n, gamma, t, 0));
        prev_t1 = iv.t1;
        prev_t2 = iv.t2;
      }
    }
  }
  out.passed = out.violations == 0;
  out.detail = std::to_string(out.checked) + " checks, B1 clamped at " + std::to_string(clamped) + " grid points";
  return out;
}

/// Width |t2 - t1| decreasing along n = 10^2 .. 10^6 and <= 0.01 at n = 10^6,
/// for every gamma <= 0.3 and T <= 32 on the grid.
inline Outcome IntervalWidth(const GridConfig& cfg, double max_width = 0.01) {
  Outcome out{"interval width: narrows to <= 0.01 at n = 1e6"};
  constexpr std::size_t kNs[] = {100, 1000, 10000, 100000, 1000000};
  double widest = 0.0;
  for (auto gamma : cfg.gammas) {
    for (auto t : cfg.t_values) {
      double prev = INFINITY;
      for (auto n : kNs) {
        const auto iv = bounds::ComputeInterval(n, gamma, t);
        const double width = iv.t2 - iv.t1;
        internal::Record(out, width < prev, "decrease " + internal::Tuple(n, gamma, t, 0));
        prev = width;
      }
      widest = std::max(widest, prev);
      internal::Record(out, prev <= max_width, "width " + internal::Tuple(1000000, gamma, t, 0));
    }
  }
  out.passed = out.violations == 0;
  std::ostringstream os;
  os << "widest band at n=1e6: " << widest;
  out.detail = os.str();
  return out;
}

/// |R_hat - test rejection rate| <= tolerance in at least `min_fraction` of
/// seeded trials with i.i.d. standard normal scores.
inline Outcome EstimatorAccuracy(const GridConfig& cfg, std::size_t n = 5000, double t = 32.0,
                                 double tolerance = 0.02, double min_fraction = 0.9) {
  Outcome out{"rejection-rate estimate close to test rejection rate"};
  const ToleranceSpec tol(t);
  double worst_fraction = 1.0;
  double worst_gap = 0.0;
  for (auto gamma : cfg.gammas) {
    std::size_t ok = 0;
    for (std::size_t trial = 0; trial < cfg.estimator_trials; ++trial) {
      std::mt19937_64 rng(cfg.seed * 7919ULL + trial * 104729ULL + static_cast<std::uint64_t>(gamma * 1e6));
      const auto model = Fit(ScoreSet(internal::StandardNormal(n, rng), gamma), tol);
      const auto test = internal::StandardNormal(n, rng);
      std::size_t rejected = 0;
      for (double s : test) rejected += Predict(model, s).decision == Decision::kReject;
      const double rate = static_cast<double>(rejected) / static_cast<double>(n);
      const double gap = std::abs(model.estimate.r_hat - rate);
      worst_gap = std::max(worst_gap, gap);
      ok += gap <= tolerance;
    }
    const double fraction = static_cast<double>(ok) / static_cast<double>(cfg.estimator_trials);
    worst_fraction = std::min(worst_fraction, fraction);
    internal::Record(out, fraction >= min_fraction, internal::Tuple(n, gamma, t, fraction));
  }
  out.passed = out.violations == 0;
  std::ostringstream os;
  os << "lowest within-tolerance fraction " << worst_fraction << " (need " << min_fraction
     << "), largest gap " << worst_gap;
  out.detail = os.str();
  return out;
}

/// Test rejection rate <= h(n, gamma, T, delta) in at least 1 - delta of
/// `trials` i.i.d. normal draws (n train / n test), gamma cycling over the grid.
inline Outcome RejectionRateBound(const GridConfig& cfg, std::size_t n = 2000, double t = 32.0) {
  Outcome out{"rejection rate below h with probability >= 1 - delta"};
  const ToleranceSpec tol(t);
  std::size_t within = 0;
  double max_rate = 0.0;
  double min_h = 1.0;
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    const double gamma = cfg.gammas[trial % cfg.gammas.size()];
    std::mt19937_64 rng(cfg.seed * 6151ULL + trial * 2654435761ULL + 17);
    const auto model = Fit(ScoreSet(internal::StandardNormal(n, rng), gamma), tol, cfg.delta);
    const auto test = internal::StandardNormal(n, rng);
    std::size_t rejected = 0;
    for (double s : test) rejected += Predict(model, s).decision == Decision::kReject;
    const double rate = static_cast<double>(rejected) / static_cast<double>(n);
    max_rate = std::max(max_rate, rate);
    min_h = std::min(min_h, model.band.h);
    const bool ok = rate <= model.band.h;
    within += ok;
    internal::Record(out, ok, internal::Tuple(n, gamma, t, rate));
  }
  const double fraction = static_cast<double>(within) / static_cast<double>(cfg.trials);
  out.passed = fraction >= 1.0 - cfg.delta;
  std::ostringstream os;
  os << "bound held in " << within << "/" << cfg.trials << " trials (violation fraction "
     << 1.0 - fraction << ", allowed " << cfg.delta << "); max rate " << max_rate << ", min h " << min_h;
  out.detail = os.str();
  return out;
}

/// Test cost per example <= the expected-cost bound in at least
/// `min_fraction` of labelled synthetic trials spread over all detectors,
/// with the q1 cost preset.
inline Outcome CostBound(const GridConfig& cfg, double t = 32.0, double min_fraction = 0.99,
                         std::size_t n = 1000, std::size_t d = 4) {
  Outcome out{"test cost below the expected-cost bound"};
  const ToleranceSpec tol(t);
  std::size_t within = 0;
  double worst_excess = -INFINITY;
  const std::size_t kinds = std::size(detectors::kAllDetectors);
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    const auto kind = detectors::kAllDetectors[trial % kinds];
    const double gamma = cfg.gammas[(trial / kinds) % cfg.gammas.size()];
    std::mt19937_64 rng(cfg.seed * 31337ULL + trial * 97ULL + 5);
    bench::Dataset data;
    switch ((trial / (kinds * cfg.gammas.size())) % 3) {
      case 0: data = bench::internal::GaussianShifted(n, d, gamma, rng); break;
      case 1: data = bench::internal::ClustersWithNoise(n, d, gamma, rng); break;
      default: data = bench::internal::MoonsWithOutliers(n, d, gamma, rng); break;
    }
    detectors::DetectorSpec spec;
    spec.kind = kind;
    spec.seed = cfg.seed + trial;
    const auto split = bench::MakeSplit(data.size(), 5, trial % 5, cfg.seed + trial);
    const auto in = bench::ScoreFold(data, spec, split);
    const auto costs = bench::CostsFor(bench::CostPreset::kQ1, data.gamma);
    const auto results = bench::EvaluateFold(in, data.gamma, costs, tol, cfg.delta);
    const auto& r = results.front();  // RejEx
    const bool ok = r.cost_per_example <= r.cost_bound;
    worst_excess = std::max(worst_excess, r.cost_per_example - r.cost_bound);
    within += ok;
    internal::Record(out, ok, data.name + " " + std::string(detectors::ToString(kind)));
  }
  const double fraction = static_cast<double>(within) / static_cast<double>(cfg.trials);
  out.passed = fraction >= min_fraction;
  std::ostringstream os;
  os << "bound held in " << within << "/" << cfg.trials << " trials (need " << min_fraction
     << "); largest cost - bound " << worst_excess;
  out.detail = os.str();
  return out;
}

inline std::vector<Outcome> RunAll(const GridConfig& cfg) {
  return {ExactOracleAgreement(cfg.exact_max_n), IntervalImplication(cfg),  IntervalConverse(cfg),
          IntervalShape(cfg),                   IntervalWidth(cfg), EstimatorAccuracy(cfg),
          RejectionRateBound(cfg),               CostBound(cfg)};
}

}  // namespace rejex::verify
