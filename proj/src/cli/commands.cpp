/* Copyright 2026 The detcal Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "detcal/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "detcal/accuracy.hpp"
#include "detcal/calmetrics.hpp"
#include "detcal/dataset.hpp"
#include "detcal/error.hpp"
#include "detcal/matching.hpp"
#include "detcal/pipeline.hpp"
#include "detcal/report.hpp"
#include "json.hpp"

namespace detcal::cli {
namespace {

using nlohmann::json;

constexpr char kNoObjects[] = "no class has ground-truth objects";

struct Common {
  std::string gt;
  std::string dets;
  int top_k = kDefaultTopK;
  std::string out;
};

struct EvaluateArgs {
  Common io;
  double tau = 0.0;
  double legacy_tau = 0.5;
  int bins = kDefaultLaEceBins;
  int dece_bins = kDefaultDEceBins;
  std::string format = "json";
  bool auto_threshold = false;
  std::string val_gt;
  std::string val_dets;
};

struct FitArgs {
  Common io;
  std::string objective = "laece0";
  std::string calibrator = "ir";
  std::optional<double> tau;
};

struct ApplyArgs {
  Common io;
  std::string pipeline;
};

struct ReliabilityArgs {
  Common io;
  std::string measure = "la_ece0";
  std::optional<double> tau;
  std::optional<int> bins;
};

struct SweepArgs {
  Common io;
  double step = 0.05;
  double tau = 0.0;
  double legacy_tau = 0.5;
  int bins = kDefaultLaEceBins;
  int dece_bins = kDefaultDEceBins;
};

struct SplitArgs {
  Common io;
  double fraction = 0.8;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

void AddCommon(CLI::App& cmd, Common& io, bool needs_gt) {
  auto* gt = cmd.add_option("--gt", io.gt, "COCO annotation file");
  if (needs_gt) gt->required();
  cmd.add_option("--dets", io.dets, "COCO results file")->required();
  cmd.add_option("--top-k", io.top_k, "Detections kept per image")->capture_default_str();
  cmd.add_option("--out", io.out, "Output file (default: standard output)");
}

void RequireTau(double tau, const std::string& flag) {
  if (!(tau >= 0.0 && tau < 1.0)) throw ValidationError(flag + " must lie in [0, 1)");
}

void RequirePositiveTau(double tau, const std::string& flag) {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError(flag + " must lie in (0, 1)");
}

void RequirePositive(int value, const std::string& flag) {
  if (value < 1) throw ValidationError(flag + " must be at least 1");
}

Dataset LoadSet(const std::string& gt, const std::string& dets, int top_k) {
  RequirePositive(top_k, "--top-k");
  return TopKPerImage(LoadDetections(dets, LoadGroundTruth(gt)), top_k);
}

void Emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(path + ": cannot open for writing");
  file << text;
  if (!file) throw Error(path + ": write failed");
}

json Number(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

json LrpJson(const std::optional<LrpResult>& r) {
  if (!r || !r->defined) return nullptr;
  return {{"value", r->lrp}, {"loc", r->lrp_loc}, {"fp", r->lrp_fp}, {"fn", r->lrp_fn}};
}

template <class Map>
std::optional<double> Lookup(const Map& map, ClassId id) {
  const auto it = map.find(id);
  if (it == map.end()) return std::nullopt;
  return it->second;
}

std::string CsvNumber(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return "";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", *v);
  return buffer;
}

int RunEvaluate(const EvaluateArgs& args, std::ostream& out) {
  RequireTau(args.tau, "--tau");
  RequirePositiveTau(args.legacy_tau, "--legacy-tau");
  RequirePositive(args.bins, "--bins");
  RequirePositive(args.dece_bins, "--dece-bins");
  Dataset test = LoadSet(args.io.gt, args.io.dets, args.io.top_k);

  std::optional<ClassThresholds> thresholds;
  if (args.auto_threshold) {
    if (args.val_gt.empty() || args.val_dets.empty()) {
      throw ValidationError("--auto-threshold needs --val-gt and --val-dets");
    }
    const Dataset val = LoadSet(args.val_gt, args.val_dets, args.io.top_k);
    thresholds = ThresholdsOnly(LrpOptimalThresholds(val, args.tau));
    test = ThresholdDetections(test, *thresholds);
  }

  EvaluationOptions options;
  options.tau = args.tau;
  options.legacy_tau = args.legacy_tau;
  options.d_ece_bins = args.dece_bins;
  options.la_ece_bins = args.bins;
  const EvaluationSummary s = Evaluate(test, options);
  const auto objects = GroundTruthCountByClass(test);
  const auto by_class = DetectionsByClass(test);

  if (args.format == "csv") {
    std::ostringstream csv;
    csv << "scope,lrp,lrp_loc,lrp_fp,lrp_fn,ap,d_ece,la_ece,la_ece0,la_ace0\n";
    const auto lrp_fields = [](const std::optional<LrpResult>& r) {
      if (!r || !r->defined) return std::string(",,,");
      return CsvNumber(r->lrp) + "," + CsvNumber(r->lrp_loc) + "," + CsvNumber(r->lrp_fp) + "," +
             CsvNumber(r->lrp_fn);
    };
    csv << "all," << lrp_fields(s.lrp) << "," << CsvNumber(s.ap.mean) << "," << CsvNumber(s.d_ece.value) << ","
        << CsvNumber(s.la_ece.value) << "," << CsvNumber(s.la_ece0.value) << "," << CsvNumber(s.la_ace0.value)
        << "\n";
    for (ClassId id : test.ClassIds()) {
      csv << "class_" << id << "," << lrp_fields(s.class_lrp.per_class.at(id)) << ","
          << CsvNumber(Lookup(s.ap.per_class, id)) << ",," << CsvNumber(Lookup(s.la_ece_per_class, id)) << ","
          << CsvNumber(Lookup(s.la_ece0_per_class, id)) << "," << CsvNumber(Lookup(s.la_ace0_per_class, id))
          << "\n";
    }
    Emit(csv.str(), args.io.out, out);
    return kExitOk;
  }

  json errors = json::object();
  if (!s.lrp) errors["lrp"] = kNoObjects;
  if (!s.ap.mean) errors["ap"] = kNoObjects;
  const std::pair<const char*, const MetricValue*> calibration[] = {
      {"d_ece", &s.d_ece}, {"la_ece", &s.la_ece}, {"la_ece0", &s.la_ece0}, {"la_ace0", &s.la_ace0}};
  for (const auto& [name, metric] : calibration) {
    if (!metric->value) errors[name] = metric->reason;
  }

  json per_class = json::object();
  for (ClassId id : test.ClassIds()) {
    per_class[std::to_string(id)] = {
        {"lrp", LrpJson(s.class_lrp.per_class.at(id))},
        {"ap", Number(Lookup(s.ap.per_class, id))},
        {"la_ece", Number(Lookup(s.la_ece_per_class, id))},
        {"la_ece0", Number(Lookup(s.la_ece0_per_class, id))},
        {"la_ace0", Number(Lookup(s.la_ace0_per_class, id))},
        {"detections", by_class.at(id).size()},
        {"objects", objects.at(id)},
    };
  }

  json config = {{"gt", args.io.gt},         {"dets", args.io.dets},     {"tau", args.tau},
                 {"legacy_tau", args.legacy_tau}, {"bins", args.bins},   {"dece_bins", args.dece_bins},
                 {"top_k", args.io.top_k},   {"auto_threshold", args.auto_threshold}};
  if (thresholds) {
    config["val_gt"] = args.val_gt;
    config["val_dets"] = args.val_dets;
    json t = json::object();
    for (const auto& [id, value] : *thresholds) t[std::to_string(id)] = value;
    config["thresholds"] = std::move(t);
  }

  const json report = {{"lrp", LrpJson(s.lrp)},
                       {"ap", Number(s.ap.mean)},
                       {"d_ece", Number(s.d_ece.value)},
                       {"la_ece", Number(s.la_ece.value)},
                       {"la_ece0", Number(s.la_ece0.value)},
                       {"la_ace0", Number(s.la_ace0.value)},
                       {"per_class", std::move(per_class)},
                       {"config", std::move(config)},
                       {"errors", std::move(errors)}};
  Emit(report.dump(2) + "\n", args.io.out, out);
  return kExitOk;
}

int RunFit(const FitArgs& args, std::ostream& out) {
  const ObjectiveKind kind = ParseObjectiveKind(args.objective);
  const CalibratorKind calibrator = ParseCalibratorKind(args.calibrator);
  Objective objective = Objective::LaEce0();
  if (kind == ObjectiveKind::kDEce) {
    objective = Objective::DEce(args.tau.value_or(0.5));
    RequirePositiveTau(objective.tau, "--tau");
  } else if (args.tau && *args.tau != 0.0) {
    throw ValidationError("--tau must be 0 for the laece0 objective");
  }
  const Dataset val = LoadSet(args.io.gt, args.io.dets, args.io.top_k);
  const CalibrationPipeline pipeline = TrainPipeline(val, objective, calibrator);
  Emit(PipelineToJson(pipeline).dump(2) + "\n", args.io.out, out);
  return kExitOk;
}

int RunApply(const ApplyArgs& args, std::ostream& out, std::ostream& err) {
  RequirePositive(args.io.top_k, "--top-k");
  const CalibrationPipeline pipeline = LoadPipeline(args.pipeline);
  const Dataset test = args.io.gt.empty()
                           ? DatasetFromDetections(ReadDetections(args.io.dets))
                           : LoadDetections(args.io.dets, LoadGroundTruth(args.io.gt));
  std::set<ClassId> missing;
  const Dataset calibrated = ApplyPipeline(pipeline, TopKPerImage(test, args.io.top_k), &missing);
  for (ClassId id : missing) {
    err << "warning: class " << id << " is not in the pipeline; its detections pass through unchanged\n";
  }
  Emit(DetectionsToJson(calibrated.detections()).dump(2) + "\n", args.io.out, out);
  return kExitOk;
}

int RunReliability(const ReliabilityArgs& args, std::ostream& out) {
  const Dataset data = LoadSet(args.io.gt, args.io.dets, args.io.top_k);
  CalibrationReport report;
  if (args.measure == "d_ece" || args.measure == "la_ece") {
    const double tau = args.tau.value_or(0.5);
    RequirePositiveTau(tau, "--tau");
    const bool dece = args.measure == "d_ece";
    const int bins = args.bins.value_or(dece ? kDefaultDEceBins : kDefaultLaEceBins);
    RequirePositive(bins, "--bins");
    const MatchResult matches = Match(data, tau);
    report = dece ? DEce(data, matches, bins) : LaEce(data, matches, bins);
  } else if (args.measure == "la_ece0") {
    if (args.tau && *args.tau != 0.0) throw ValidationError("--tau must be 0 for la_ece0");
    const int bins = args.bins.value_or(kDefaultLaEceBins);
    RequirePositive(bins, "--bins");
    report = LaEce0(data, Match(data, 0.0), bins);
  } else {
    throw ValidationError("unknown measure '" + args.measure + "' (expected d_ece, la_ece or la_ece0)");
  }
  std::ostringstream csv;
  const std::vector<ReliabilityRow> rows = ReliabilityData(report);
  WriteReliabilityCsv(csv, rows);
  Emit(csv.str(), args.io.out, out);
  return kExitOk;
}

int RunSweep(const SweepArgs& args, std::ostream& out) {
  RequireTau(args.tau, "--tau");
  RequirePositiveTau(args.legacy_tau, "--legacy-tau");
  RequirePositive(args.bins, "--bins");
  RequirePositive(args.dece_bins, "--dece-bins");
  const Dataset data = LoadSet(args.io.gt, args.io.dets, args.io.top_k);
  EvaluationOptions options;
  options.tau = args.tau;
  options.legacy_tau = args.legacy_tau;
  options.d_ece_bins = args.dece_bins;
  options.la_ece_bins = args.bins;
  const std::vector<SweepRow> rows = ThresholdSweep(data, args.step, options);
  std::ostringstream csv;
  WriteSweepCsv(csv, rows);
  Emit(csv.str(), args.io.out, out);
  return kExitOk;
}

int RunSplit(const SplitArgs& args, std::ostream& out) {
  const Dataset data = LoadDetections(args.io.dets, LoadGroundTruth(args.io.gt));
  const auto [first, second] = Split(data, args.fraction, args.seed);
  const std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);
  SaveGroundTruth(first, dir / "val_gt.json");
  SaveDetections(first.detections(), dir / "val_dets.json");
  SaveGroundTruth(second, dir / "test_gt.json");
  SaveDetections(second.detections(), dir / "test_dets.json");
  out << "val: " << first.image_ids().size() << " images, test: " << second.image_ids().size()
      << " images\n";
  return kExitOk;
}

void ReportError(std::ostream& err, bool as_json, const char* kind, const std::string& message) {
  if (as_json) {
    err << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
  } else {
    err << "error: " << message << "\n";
  }
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint accuracy and calibration evaluation for object detectors"};
  app.name("detcal");
  app.require_subcommand(1);
  app.fallthrough();
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Report errors as JSON on standard error");

  EvaluateArgs eval;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Accuracy and calibration report");
  AddCommon(*evaluate, eval.io, true);
  evaluate->add_option("--tau", eval.tau, "TP-validation IoU for LRP and threshold search")->capture_default_str();
  evaluate->add_option("--legacy-tau", eval.legacy_tau, "TP-validation IoU for AP, D-ECE and LaECE")
      ->capture_default_str();
  evaluate->add_option("--bins", eval.bins, "Bins for LaECE and LaECE0")->capture_default_str();
  evaluate->add_option("--dece-bins", eval.dece_bins, "Bins for D-ECE")->capture_default_str();
  evaluate->add_option("--format", eval.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  evaluate->add_flag("--auto-threshold", eval.auto_threshold,
                     "Apply per-class LRP-optimal thresholds found on the validation set");
  evaluate->add_option("--val-gt", eval.val_gt, "Validation annotation file");
  evaluate->add_option("--val-dets", eval.val_dets, "Validation results file");

  FitArgs fit;
  CLI::App* calibrate_fit = app.add_subcommand("calibrate-fit", "Fit a calibration pipeline on a validation set");
  AddCommon(*calibrate_fit, fit.io, true);
  calibrate_fit->add_option("--objective", fit.objective, "laece0 or dece")->capture_default_str();
  calibrate_fit->add_option("--calibrator", fit.calibrator, "ts, platt or ir")->capture_default_str();
  calibrate_fit->add_option("--tau", fit.tau, "TP-validation IoU (dece objective, default 0.5)");

  ApplyArgs apply;
  CLI::App* calibrate_apply = app.add_subcommand("calibrate-apply", "Apply a fitted pipeline to detections");
  AddCommon(*calibrate_apply, apply.io, false);
  calibrate_apply->add_option("--pipeline", apply.pipeline, "Pipeline file")->required();

  ReliabilityArgs rel;
  CLI::App* reliability = app.add_subcommand("reliability", "Reliability-diagram rows as CSV");
  AddCommon(*reliability, rel.io, true);
  reliability->add_option("--measure", rel.measure, "d_ece, la_ece or la_ece0")->capture_default_str();
  reliability->add_option("--tau", rel.tau, "TP-validation IoU (default 0.5, or 0 for la_ece0)");
  reliability->add_option("--bins", rel.bins, "Bin count (default 10 for d_ece, 25 otherwise)");

  SweepArgs sw;
  CLI::App* sweep = app.add_subcommand("sweep", "Metrics over a grid of score thresholds as CSV");
  AddCommon(*sweep, sw.io, true);
  sweep->add_option("--step", sw.step, "Grid step")->capture_default_str();
  sweep->add_option("--tau", sw.tau, "TP-validation IoU for LRP")->capture_default_str();
  sweep->add_option("--legacy-tau", sw.legacy_tau, "TP-validation IoU for AP, D-ECE and LaECE")
      ->capture_default_str();
  sweep->add_option("--bins", sw.bins, "Bins for LaECE and LaECE0")->capture_default_str();
  sweep->add_option("--dece-bins", sw.dece_bins, "Bins for D-ECE")->capture_default_str();

  SplitArgs sp;
  CLI::App* split = app.add_subcommand("split", "Seeded image-level split into val and test sets");
  split->add_option("--gt", sp.io.gt, "COCO annotation file")->required();
  split->add_option("--dets", sp.io.dets, "COCO results file")->required();
  split->add_option("--fraction", sp.fraction, "Share of images in the val part")->capture_default_str();
  split->add_option("--seed", sp.seed, "Shuffle seed")->capture_default_str();
  split->add_option("--out-dir", sp.out_dir, "Directory for val_*.json and test_*.json")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    ReportError(err, json_errors, "usage", e.what());
    return kExitValidation;
  }

  try {
    if (evaluate->parsed()) return RunEvaluate(eval, out);
    if (calibrate_fit->parsed()) return RunFit(fit, out);
    if (calibrate_apply->parsed()) return RunApply(apply, out, err);
    if (reliability->parsed()) return RunReliability(rel, out);
    if (sweep->parsed()) return RunSweep(sw, out);
    if (split->parsed()) return RunSplit(sp, out);
  } catch (const ValidationError& e) {
    ReportError(err, json_errors, "validation", e.what());
    return kExitValidation;
  } catch (const EvaluationError& e) {
    ReportError(err, json_errors, "evaluation", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    ReportError(err, json_errors, "internal", e.what());
    return kExitInternal;
  }
  ReportError(err, json_errors, "internal", "no subcommand ran");
  return kExitInternal;
}

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  return Run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace detcal::cli
