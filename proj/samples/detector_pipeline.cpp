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

// Detector scores feed the rejector; compares test cost with and without
// rejection on one synthetic dataset.

#include <cstdio>
#include <random>
#include <string>

#include "rejex/bench.hpp"

int main() {
  std::mt19937_64 rng(1);
  const auto data = rejex::bench::internal::GaussianShifted(2000, 4, 0.1, rng);
  const auto split = rejex::bench::MakeSplit(data.size(), 5, 0, 1);

  rejex::detectors::DetectorSpec spec;
  spec.kind = rejex::detectors::DetectorKind::kIForest;
  const auto fold = rejex::bench::ScoreFold(data, spec, split);

  const auto costs = rejex::bench::CostsFor(rejex::bench::CostPreset::kQ1, data.gamma);
  const auto results = rejex::bench::EvaluateFold(fold, data.gamma, costs, rejex::ToleranceSpec(32));

  std::printf("dataset %s, detector %s, gamma %.3f\n", data.name.c_str(),
              std::string(rejex::detectors::ToString(spec.kind)).c_str(), data.gamma);
  std::printf("%-10s %10s %10s %6s %6s\n", "method", "cost", "rejected", "FP", "FN");
  for (const auto& r : results) {
    std::printf("%-10s %10.4f %10.4f %6zu %6zu\n", std::string(rejex::bench::ToString(r.method)).c_str(),
                r.cost_per_example, r.rejection_rate, r.false_positives, r.false_negatives);
  }
  std::printf("expected-cost bound %.4f, rejection-rate bound %.4f\n", results[0].cost_bound, results[0].bound_h);
  return 0;
}
