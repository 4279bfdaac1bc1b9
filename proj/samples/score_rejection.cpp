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

// Fits a rejector on precomputed anomaly scores and labels a few test points.

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "rejex/bounds.hpp"
#include "rejex/rejector.hpp"

int main() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::vector<double> train(2000);
  for (auto& s : train) s = normal(rng);

  const rejex::ToleranceSpec tol(32);
  const auto model = rejex::Fit(rejex::ScoreSet(train, 0.1), tol);

  std::printf("lambda   %.6f\n", model.lambda);
  std::printf("[t1,t2]  [%.6f, %.6f]\n", model.band.t1, model.band.t2);
  std::printf("R_hat    %.4f  (h = %.4f at delta = %.2f)\n", model.estimate.r_hat, model.band.h, model.band.delta);

  const auto bound = rejex::bounds::ExpectedCostUpperBound(model.estimate.a, model.estimate.b, 0.1, {1.0, 1.0, 0.1});
  std::printf("cost bound with c_fp = c_fn = 1, c_r = 0.1: %.4f\n\n", bound.bound);

  std::printf("%8s %8s %12s %10s  %s\n", "score", "psi_n", "P(Y=1|s)", "conf", "decision");
  for (double s : {-2.0, 0.0, 1.0, 1.2, 1.3, 1.5, 2.0, 4.0}) {
    const auto p = rejex::Predict(model, s);
    std::printf("%8.2f %8.4f %12.4g %10.4g  %s\n", s, p.stability.psi_n, p.stability.p_anomaly, p.stability.confidence,
                std::string(rejex::ToString(p.decision)).c_str());
  }
  return 0;
}
