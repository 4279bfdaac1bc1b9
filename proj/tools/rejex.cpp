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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rejex/bench.hpp"
#include "rejex/bounds.hpp"
#include "rejex/core.hpp"
#include "rejex/csv.hpp"
#include "rejex/detectors.hpp"
#include "rejex/model_io.hpp"
#include "rejex/rejector.hpp"
#include "rejex/report.hpp"
#include "rejex/verify.hpp"

namespace {

using rejex::Error;
using rejex::ErrorCode;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int ReportError(const std::string& code, const std::string& message) {
  json err = {{"schema_version", rejex::report::kSchemaVersion},
              {"error", {{"code", code}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  return kExitUsage;
}

[[noreturn]] void Usage(const std::string& message) {
  throw Error(ErrorCode::kDomainError, message);
}

/// "q1", "case1", "case2", "case3", or "custom:c_fp,c_fn,c_r".
rejex::bench::CostChoice ParseCosts(const std::string& text) {
  rejex::bench::CostChoice choice;
  if (auto preset = rejex::bench::ParseCostPreset(text)) {
    choice.preset = preset;
    return choice;
  }
  std::string body = text;
  if (body.rfind("custom:", 0) == 0) body = body.substr(7);
  else if (body.rfind("custom", 0) == 0) body = body.substr(6);
  std::replace(body.begin(), body.end(), ',', ' ');
  std::istringstream in(body);
  rejex::CostSpec c;
  std::string extra;
  if (!(in >> c.c_fp >> c.c_fn >> c.c_r) || (in >> extra)) {
    Usage("--costs must be q1, case1, case2, case3 or custom:c_fp,c_fn,c_r; got '" + text + "'");
  }
  choice.preset.reset();
  choice.custom = c;
  return choice;
}

rejex::detectors::DetectorKind ParseDetector(const std::string& name) {
  const auto kind = rejex::detectors::ParseDetectorKind(name);
  if (!kind) Usage("unknown detector '" + name + "' (expected knn, lof, iforest or hbos)");
  return *kind;
}

rejex::detectors::Matrix Features(const rejex::csv::Table& table,
                                  const std::optional<std::string>& label_column) {
  std::optional<std::size_t> skip;
  if (label_column) {
    const auto it = std::find(table.header.begin(), table.header.end(), *label_column);
    if (it != table.header.end()) skip = static_cast<std::size_t>(it - table.header.begin());
  }
  const std::size_t cols = table.header.size() - (skip ? 1 : 0);
  rejex::detectors::Matrix x(table.rows.size(), cols);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < table.rows[i].size(); ++j) {
      if (!skip || j != *skip) x(i, c++) = table.rows[i][j];
    }
  }
  return x;
}

std::optional<double> GammaFromLabels(const rejex::csv::Table& table,
                                      const std::optional<std::string>& label_column) {
  if (!label_column) return std::nullopt;
  const auto it = std::find(table.header.begin(), table.header.end(), *label_column);
  if (it == table.header.end()) {
    throw Error(ErrorCode::kParseError, "no column named '" + *label_column + "'");
  }
  const auto j = static_cast<std::size_t>(it - table.header.begin());
  std::vector<int> labels;
  for (const auto& row : table.rows) {
    if (row[j] != 0.0 && row[j] != 1.0) {
      throw Error(ErrorCode::kNonBinaryLabels, "label column must contain only 0 and 1");
    }
    labels.push_back(static_cast<int>(row[j]));
  }
  return rejex::bench::LabelMean(labels);
}

// ---------------------------------------------------------------------------

struct FitOptions {
  std::string train;
  std::string model_out;
  std::optional<double> gamma;
  double t = 32.0;
  double delta = rejex::bounds::kDefaultDelta;
  std::optional<std::string> detector;
  std::optional<std::string> label_column;
  bool scores_only = false;
  std::uint64_t seed = 0;
};

int RunFit(const FitOptions& opt) {
  const rejex::ToleranceSpec tol(opt.t);
  rejex::bounds::RequireDelta(opt.delta);
  if (opt.gamma) rejex::internal::RequireGamma(*opt.gamma);
  const auto table = rejex::csv::ReadFile(opt.train);

  std::optional<double> gamma = opt.gamma;
  if (!gamma) gamma = GammaFromLabels(table, opt.label_column);
  if (!gamma) throw Error(ErrorCode::kMissingGamma, "--gamma is required when no label column is given");

  rejex::model_io::Model model{rejex::Fit(rejex::ScoreSet({0.0}, 0.0), tol), std::nullopt};
  if (opt.detector && !opt.scores_only) {
    rejex::detectors::DetectorSpec spec;
    spec.kind = ParseDetector(*opt.detector);
    spec.seed = opt.seed;
    auto detector = rejex::detectors::FitDetector(spec, Features(table, opt.label_column));
    std::vector<double> scores(detector.training_scores().begin(), detector.training_scores().end());
    model.rejector = rejex::Fit(rejex::ScoreSet(std::move(scores), *gamma), tol, opt.delta);
    model.detector.emplace(std::move(detector));
  } else {
    auto x = Features(table, opt.label_column);
    if (x.cols() != 1) {
      throw Error(ErrorCode::kDimensionMismatch,
                  opt.train + ": score mode expects one score column; pass --detector for feature files");
    }
    model.rejector = rejex::Fit(rejex::ScoreSet(std::vector<double>(x.data().begin(), x.data().end()), *gamma), tol, opt.delta);
  }

  if (!opt.model_out.empty()) rejex::model_io::Save(model, opt.model_out);

  const auto& r = model.rejector;
  json out;
  out["schema_version"] = rejex::report::kSchemaVersion;
  out["n"] = r.train.n();
  out["gamma"] = r.train.gamma();
  out["t"] = r.tol.t();
  out["delta"] = r.band.delta;
  out["lambda"] = std::isfinite(r.lambda) ? json(r.lambda) : json(nullptr);
  out["t1"] = r.band.t1;
  out["t2"] = r.band.t2;
  out["epsilon"] = r.tol.epsilon();
  out["tau"] = r.tol.tau();
  out["r_hat"] = r.estimate.r_hat;
  out["h"] = r.band.h;
  out["degenerate_g"] = r.degenerate_g;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PredictOptions {
  std::string model_in;
  std::string test;
  std::string out;
  std::optional<std::string> label_column;
  bool scores_only = false;
};

int RunPredict(const PredictOptions& opt) {
  const auto model = rejex::model_io::Load(opt.model_in);
  std::ifstream in(opt.test);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + opt.test);
  std::stringstream buffer;
  buffer << in.rdbuf();

  std::vector<double> scores;
  if (buffer.str().find_first_not_of(" \t\r\n") != std::string::npos) {
    const auto table = rejex::csv::Parse(buffer, opt.test);
    if (model.detector && !opt.scores_only) {
      const auto x = Features(table, opt.label_column);
      if (x.cols() != model.detector->dims()) {
        throw Error(ErrorCode::kSchemaMismatch, opt.test + ": model expects " +
                                                    std::to_string(model.detector->dims()) +
                                                    " feature columns, found " + std::to_string(x.cols()));
      }
      if (x.rows() > 0) scores = model.detector->Score(x);
    } else {
      const auto x = Features(table, opt.label_column);
      if (x.cols() != 1) {
        throw Error(ErrorCode::kSchemaMismatch,
                    opt.test + ": model expects a single score column, found " + std::to_string(x.cols()));
      }
      scores.assign(x.data().begin(), x.data().end());
    }
  }

  std::ofstream file;
  if (!opt.out.empty() && opt.out != "-") {
    file.open(opt.out);
    if (!file) throw Error(ErrorCode::kParseError, "cannot write " + opt.out);
  }
  std::ostream& out = file.is_open() ? file : std::cout;
  using rejex::csv::FormatDouble;
  out << "score,psi_n,p_anomaly,confidence,decision\n";
  const auto preds = rejex::PredictBatch(model.rejector, scores);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& p = preds[i];
    out << FormatDouble(scores[i]) << ',' << FormatDouble(p.stability.psi_n) << ','
        << FormatDouble(p.stability.p_anomaly) << ',' << FormatDouble(p.stability.confidence) << ','
        << rejex::ToString(p.decision) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyOptions {
  double t_min = 4.0;
  std::size_t trials = 200;
  double delta = rejex::bounds::kDefaultDelta;
  std::uint64_t seed = 0;
  std::size_t psi_samples = 1000;
  std::size_t exact_max_n = 200;
};

int RunVerify(const VerifyOptions& opt) {
  rejex::ToleranceSpec{opt.t_min};
  rejex::bounds::RequireDelta(opt.delta);
  if (opt.trials == 0 || opt.psi_samples == 0) Usage("--trials and --psi-samples must be positive");

  rejex::verify::GridConfig cfg;
  cfg.t_values.erase(std::remove_if(cfg.t_values.begin(), cfg.t_values.end(),
                                    [&](double t) { return t < opt.t_min; }),
                     cfg.t_values.end());
  if (std::find(cfg.t_values.begin(), cfg.t_values.end(), opt.t_min) == cfg.t_values.end()) {
    cfg.t_values.insert(cfg.t_values.begin(), opt.t_min);
  }
  cfg.trials = opt.trials;
  cfg.delta = opt.delta;
  cfg.seed = opt.seed;
  cfg.psi_samples = opt.psi_samples;
  cfg.exact_max_n = opt.exact_max_n;

  bool all = true;
  for (const auto& o : rejex::verify::RunAll(cfg)) {
    std::cout << (o.passed ? "PASS " : "FAIL ") << o.name << ": " << o.detail << "\n";
    if (!o.first_violation.empty()) std::cout << "     first violation: " << o.first_violation << "\n";
    all = all && o.passed;
  }
  return all ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

struct BenchOptions {
  bool synthetic = false;
  std::string datasets;
  std::vector<std::string> detectors;
  std::string costs = "q1";
  std::string out = "bench_out";
  double t = 32.0;
  double delta = rejex::bounds::kDefaultDelta;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::string label_column = "label";
};

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kParseError, "cannot write " + path.string());
  f << content;
}

int RunBench(const BenchOptions& opt) {
  namespace fs = std::filesystem;
  rejex::bench::BenchConfig cfg;
  cfg.t = rejex::ToleranceSpec(opt.t).t();
  rejex::bounds::RequireDelta(opt.delta);
  cfg.delta = opt.delta;
  if (opt.folds < 2) Usage("--folds must be at least 2");
  cfg.folds = opt.folds;
  cfg.seed = opt.seed;
  cfg.costs = ParseCosts(opt.costs);
  if (!opt.detectors.empty()) {
    cfg.detectors.clear();
    for (const auto& d : opt.detectors) cfg.detectors.push_back(ParseDetector(d));
  }
  if (opt.synthetic == !opt.datasets.empty()) Usage("pass exactly one of --synthetic or --datasets");

  std::vector<rejex::bench::Dataset> data;
  if (opt.synthetic) {
    data = rejex::bench::SyntheticSuite(opt.seed);
  } else {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(opt.datasets)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        data.push_back(rejex::bench::LoadCsv(f.string(), opt.label_column, std::nullopt, opt.seed));
      } catch (const Error& e) {
        std::cerr << "skipping dataset " << f.string() << ": " << rejex::ToString(e.code()) << ": "
                  << e.what() << "\n";
      }
    }
  }

  const auto results = rejex::bench::RunBenchmark(data, cfg);
  if (results.empty()) {
    std::cerr << json{{"schema_version", rejex::report::kSchemaVersion},
                      {"error", {{"code", "EmptyResults"}, {"message", "every dataset failed"}}}}
                     .dump()
              << "\n";
    return kExitFailure;
  }
  const auto rep = rejex::bench::Aggregate(results);
  const auto theory = rejex::bench::TheoryCheck(results);

  fs::create_directories(opt.out);
  const fs::path dir(opt.out);
  std::ostringstream trials, theory_csv, timings;
  rejex::report::WriteTrialsCsv(trials, results, rep.ranks);
  rejex::report::WriteTheoryCsv(theory_csv, theory);
  rejex::report::WriteTimingsCsv(timings, results);
  WriteFile(dir / "trials.csv", trials.str());
  WriteFile(dir / "theory.csv", theory_csv.str());
  WriteFile(dir / "timings.csv", timings.str());
  WriteFile(dir / "report.json", rejex::report::ToJson(rep, cfg).dump(2) + "\n");

  const auto& overall = rep.overall;
  std::cout << "trials: " << results.size() << "\n";
  for (const auto& [method, s] : overall) {
    std::cout << rejex::bench::ToString(method) << ": mean cost " << s.cost.mean << ", mean rank "
              << s.mean_rank << ", mean rejection rate " << s.rejection.mean << "\n";
  }
  std::cout << "reports written to " << opt.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability-based rejection for unsupervised anomaly detectors"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a rejector and print its threshold, band and bounds");
  fit_cmd->add_option("--train", fit.train, "Training CSV (score column or features)")->required();
  fit_cmd->add_option("--model-out", fit.model_out, "Write the fitted model here");
  fit_cmd->add_option("--gamma", fit.gamma, "Contamination factor in [0, 0.5)");
  fit_cmd->add_option("--t-tolerance", fit.t, "Tolerance exponent T (epsilon = 2e^-T)");
  fit_cmd->add_option("--delta", fit.delta, "Confidence parameter of the rejection-rate bound");
  fit_cmd->add_option("--detector", fit.detector, "knn, lof, iforest or hbos (feature input)");
  fit_cmd->add_option("--label-column", fit.label_column, "Column with 0/1 labels, excluded from features");
  fit_cmd->add_flag("--scores-only", fit.scores_only, "Treat the input as precomputed scores");
  fit_cmd->add_option("--seed", fit.seed, "Detector seed");

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Label test points as normal, anomaly or reject");
  predict_cmd->add_option("--model", predict.model_in, "Model file written by fit")->required();
  predict_cmd->add_option("--test", predict.test, "Test CSV")->required();
  predict_cmd->add_option("--out", predict.out, "Output CSV (default: standard output)");
  predict_cmd->add_option("--label-column", predict.label_column, "Column excluded from features");
  predict_cmd->add_flag("--scores-only", predict.scores_only, "Test file holds scores, not features");

  VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "Check the theoretical guarantees numerically");
  verify_cmd->add_option("--t-min", verify.t_min, "Smallest T in the grid");
  verify_cmd->add_option("--trials", verify.trials, "Monte Carlo trials");
  verify_cmd->add_option("--delta", verify.delta, "Confidence parameter of the rejection-rate bound");
  verify_cmd->add_option("--seed", verify.seed, "Seed of the Monte Carlo trials");
  verify_cmd->add_option("--psi-samples", verify.psi_samples, "Samples per rejection band");
  verify_cmd->add_option("--exact-max-n", verify.exact_max_n, "Largest n in the exact comparison");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run RejEx, NoReject and Oracle over datasets and detectors");
  bench_cmd->add_flag("--synthetic", bench.synthetic, "Use the built-in synthetic suite");
  bench_cmd->add_option("--datasets", bench.datasets, "Directory of labelled CSV files");
  bench_cmd->add_option("--detector", bench.detectors, "Detectors to run (repeatable; default all)")
      ->delimiter(',');
  bench_cmd->add_option("--costs", bench.costs, "q1, case1, case2, case3 or custom:c_fp,c_fn,c_r");
  bench_cmd->add_option("--out", bench.out, "Output directory");
  bench_cmd->add_option("--t-tolerance", bench.t, "Tolerance exponent T");
  bench_cmd->add_option("--delta", bench.delta, "Confidence parameter of the rejection-rate bound");
  bench_cmd->add_option("--folds", bench.folds, "Cross-validation folds");
  bench_cmd->add_option("--seed", bench.seed, "Seed for folds, detectors and synthetic data");
  bench_cmd->add_option("--label-column", bench.label_column, "Label column in dataset files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return ReportError("UsageError", e.what());
  }

  try {
    if (*fit_cmd) return RunFit(fit);
    if (*predict_cmd) return RunPredict(predict);
    if (*verify_cmd) return RunVerify(verify);
    if (*bench_cmd) return RunBench(bench);
  } catch (const Error& e) {
    return ReportError(std::string(rejex::ToString(e.code())), e.what());
  } catch (const std::exception& e) {
    return ReportError("IoError", e.what());
  }
  return kExitUsage;
}
