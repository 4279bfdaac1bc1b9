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

#include <map>
#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "rejex/bench.hpp"
#include "rejex/csv.hpp"

/// Report writers. CSV columns are fixed and contain nothing
/// run-dependent, so identical inputs give byte-identical files.
namespace rejex::report {

inline constexpr int kSchemaVersion = 1;

using csv::FormatDouble;

inline void WriteTrialsCsv(std::ostream& out, std::span<const bench::TrialResult> results,
                           std::span<const double> ranks) {
  out << "dataset,detector,fold,method,c_fp,c_fn,c_r,n_train,n_test,false_positives,"
         "false_negatives,rejections,cost_per_example,rejection_rate,train_cost,bound_h,"
         "cost_bound,estimate_r_hat,threshold,rank\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    out << r.dataset << ',' << r.detector << ',' << r.fold << ',' << bench::ToString(r.method) << ','
        << FormatDouble(r.costs.c_fp) << ',' << FormatDouble(r.costs.c_fn) << ','
        << FormatDouble(r.costs.c_r) << ',' << r.n_train << ',' << r.n_test << ','
        << r.false_positives << ',' << r.false_negatives << ',' << r.rejections << ','
        << FormatDouble(r.cost_per_example) << ',' << FormatDouble(r.rejection_rate) << ','
        << FormatDouble(r.train_cost) << ',' << FormatDouble(r.bound_h) << ','
        << FormatDouble(r.cost_bound) << ',' << FormatDouble(r.estimate_r_hat) << ','
        << FormatDouble(r.threshold) << ',' << FormatDouble(i < ranks.size() ? ranks[i] : 0.0) << '\n';
  }
}

/// Estimate vs. empirical vs. bound, one row per dataset.
inline void WriteTheoryCsv(std::ostream& out, std::span<const bench::TheoryRow> rows) {
  out << "dataset,trials,estimate_r_hat,rejection_rate,bound_h,cost_per_example,cost_bound\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.trials << ',' << FormatDouble(r.r_hat) << ','
        << FormatDouble(r.rejection_rate) << ',' << FormatDouble(r.bound_h) << ','
        << FormatDouble(r.cost) << ',' << FormatDouble(r.cost_bound) << '\n';
  }
}

/// Wall times live in their own file because they change run to run.
inline void WriteTimingsCsv(std::ostream& out, std::span<const bench::TrialResult> results) {
  out << "dataset,detector,fold,method,wall_time_threshold_ms\n";
  for (const auto& r : results) {
    out << r.dataset << ',' << r.detector << ',' << r.fold << ',' << bench::ToString(r.method) << ','
        << FormatDouble(r.wall_time_threshold_ms) << '\n';
  }
}

inline nlohmann::json ToJson(const bench::MeanStd& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}};
}

inline nlohmann::json ToJson(const std::map<bench::Method, bench::MethodSummary>& methods) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [m, s] : methods) {
    j[std::string(bench::ToString(m))] = {
        {"cost", ToJson(s.cost)}, {"rejection_rate", ToJson(s.rejection)}, {"mean_rank", s.mean_rank}};
  }
  return j;
}

inline nlohmann::json ToJson(const bench::BenchmarkReport& rep, const bench::BenchConfig& cfg) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  nlohmann::json dets = nlohmann::json::array();
  for (auto k : cfg.detectors) dets.push_back(std::string(detectors::ToString(k)));
  j["config"] = {{"detectors", dets},     {"costs", cfg.costs.Name()}, {"t", cfg.t},
                 {"delta", cfg.delta},    {"folds", cfg.folds},        {"seed", cfg.seed}};
  if (!cfg.costs.preset) {
    j["config"]["custom_costs"] = {{"c_fp", cfg.costs.custom.c_fp},
                                   {"c_fn", cfg.costs.custom.c_fn},
                                   {"c_r", cfg.costs.custom.c_r}};
  }
  j["overall"] = ToJson(rep.overall);
  j["oracle_gap_percent"] = rep.oracle_gap_percent;
  j["reduction_vs_noreject_percent"] = rep.reduction_vs_noreject_percent;
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [name, d] : rep.per_detector) {
    per[name] = {{"methods", ToJson(d.methods)},
                 {"oracle_gap_percent", d.oracle_gap_percent},
                 {"reduction_vs_noreject_percent", d.reduction_vs_noreject_percent}};
  }
  j["per_detector"] = per;
  j["bound_checks"] = {{"rejex_trials", rep.rejex_trials},
                       {"rejection_bound_violations", rep.rejection_bound_violations},
                       {"cost_bound_violations", rep.cost_bound_violations}};
  j["threshold_time_ms"] = {{"rejex", ToJson(rep.rejex_threshold_ms)},
                            {"oracle", ToJson(rep.oracle_threshold_ms)}};
  return j;
}

}  // namespace rejex::report
