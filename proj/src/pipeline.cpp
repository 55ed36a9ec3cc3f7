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
#include "detcal/pipeline.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "detcal/accuracy.hpp"
#include "detcal/error.hpp"
#include "detcal/matching.hpp"

namespace detcal {
namespace {

// Replaces each score by the class calibrator's output and re-canonicalizes.
Dataset Calibrate(const Dataset& dataset, const std::map<ClassId, ClassCalibrator>& classes) {
  std::vector<Detection> calibrated = dataset.detections();
  for (Detection& det : calibrated) {
    const auto it = classes.find(det.category_id);
    if (it != classes.end()) det.score = Apply(it->second.model, det.score);
  }
  return dataset.WithDetections(std::move(calibrated));
}

void FillOperatingThresholds(const Dataset& calibrated, double tau,
                             std::map<ClassId, ClassCalibrator>& classes) {
  const std::map<ClassId, OptimalThreshold> v = LrpOptimalThresholds(calibrated, tau);
  for (auto& [id, entry] : classes) {
    const auto it = v.find(id);
    entry.v_threshold = it == v.end() ? 0.0 : it->second.threshold;
  }
}

CalibrationPipeline TrainLaEce0(const Dataset& val, CalibratorKind kind) {
  CalibrationPipeline pipeline{Objective::LaEce0(), kind, {}};
  const ClassThresholds u = ThresholdsOnly(LrpOptimalThresholds(val, 0.0));
  const Dataset thresholded = ThresholdDetections(val, u);
  const MatchResult matches = Match(thresholded, 0.0);
  const std::vector<Detection>& dets = thresholded.detections();
  for (const auto& [id, indices] : DetectionsByClass(thresholded)) {
    ClassCalibrator& entry = pipeline.classes[id];
    entry.class_id = id;
    if (indices.empty()) continue;
    std::vector<CalibrationTargetPair> pairs;
    pairs.reserve(indices.size());
    for (std::size_t i : indices) pairs.push_back({dets[i].score, matches.iou[i]});
    entry.u_threshold = u.at(id);
    entry.model = Fit(kind, pairs);
  }
  FillOperatingThresholds(Calibrate(thresholded, pipeline.classes), 0.0, pipeline.classes);
  return pipeline;
}

CalibrationPipeline TrainDEce(const Dataset& val, const Objective& objective, CalibratorKind kind) {
  CalibrationPipeline pipeline{objective, kind, {}};
  ClassThresholds u;
  for (ClassId id : val.ClassIds()) u[id] = kDEceFixedThreshold;
  const Dataset thresholded = ThresholdDetections(val, u);
  const MatchResult matches = Match(thresholded, objective.tau);
  std::vector<CalibrationTargetPair> pairs;
  pairs.reserve(thresholded.detections().size());
  for (std::size_t i = 0; i < thresholded.detections().size(); ++i) {
    pairs.push_back({thresholded.detections()[i].score, matches.IsTruePositive(i) ? 1.0 : 0.0});
  }
  const CalibratorModel shared = pairs.empty() ? CalibratorModel{IdentityModel{}} : Fit(kind, pairs);
  for (const auto& [id, indices] : DetectionsByClass(thresholded)) {
    ClassCalibrator& entry = pipeline.classes[id];
    entry.class_id = id;
    if (indices.empty()) continue;
    entry.u_threshold = kDEceFixedThreshold;
    entry.model = shared;
  }
  FillOperatingThresholds(Calibrate(thresholded, pipeline.classes), objective.tau, pipeline.classes);
  return pipeline;
}

double RequireUnitInterval(const nlohmann::json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key) || !doc.at(key).is_number()) {
    throw ValidationError(where + ": missing numeric field '" + key + "'");
  }
  const double v = doc.at(key).get<double>();
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(where + ": '" + key + "' outside [0, 1]");
  return v;
}

}  // namespace

std::string ToString(ObjectiveKind kind) {
  return kind == ObjectiveKind::kLaEce0 ? "laece0" : "dece";
}

ObjectiveKind ParseObjectiveKind(const std::string& name) {
  if (name == "laece0") return ObjectiveKind::kLaEce0;
  if (name == "dece") return ObjectiveKind::kDEce;
  throw ValidationError("unknown objective '" + name + "' (expected laece0 or dece)");
}

ClassCalibrator CalibrationPipeline::For(ClassId class_id) const {
  const auto it = classes.find(class_id);
  if (it != classes.end()) return it->second;
  ClassCalibrator fallback;
  fallback.class_id = class_id;
  return fallback;
}

CalibrationPipeline TrainPipeline(const Dataset& val, const Objective& objective, CalibratorKind kind) {
  if (val.detections().empty()) throw ValidationError("validation set has no detections");
  if (!(objective.tau >= 0.0 && objective.tau < 1.0)) throw ValidationError("objective tau must lie in [0, 1)");
  if (objective.kind == ObjectiveKind::kLaEce0) {
    if (objective.tau != 0.0) throw ValidationError("the laece0 objective uses tau = 0");
    return TrainLaEce0(val, kind);
  }
  if (!(objective.tau > 0.0)) throw ValidationError("the dece objective needs tau > 0");
  return TrainDEce(val, objective, kind);
}

Dataset ApplyPipeline(const CalibrationPipeline& pipeline, const Dataset& test, std::set<ClassId>* missing) {
  std::vector<Detection> kept;
  kept.reserve(test.detections().size());
  for (const Detection& det : test.detections()) {
    const auto it = pipeline.classes.find(det.category_id);
    if (it == pipeline.classes.end()) {
      if (missing != nullptr) missing->insert(det.category_id);
      kept.push_back(det);
      continue;
    }
    const ClassCalibrator& entry = it->second;
    if (det.score < entry.u_threshold) continue;
    Detection calibrated = det;
    calibrated.score = Apply(entry.model, det.score);
    if (calibrated.score < entry.v_threshold) continue;
    kept.push_back(calibrated);
  }
  return test.WithDetections(std::move(kept));
}

nlohmann::json PipelineToJson(const CalibrationPipeline& pipeline) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [id, entry] : pipeline.classes) {
    classes.push_back({{"id", id},
                       {"u_thr", entry.u_threshold},
                       {"v_thr", entry.v_threshold},
                       {"model", ModelToJson(entry.model)}});
  }
  nlohmann::json doc = {{"objective", ToString(pipeline.objective.kind)},
                        {"tau", pipeline.objective.tau},
                        {"calibrator", ToString(pipeline.calibrator)},
                        {"classes", std::move(classes)}};
  doc["fixed_threshold"] =
      pipeline.objective.kind == ObjectiveKind::kDEce ? nlohmann::json(kDEceFixedThreshold) : nlohmann::json();
  return doc;
}

CalibrationPipeline PipelineFromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("pipeline: top level must be an object");
  if (!doc.contains("objective") || !doc.at("objective").is_string()) {
    throw ValidationError("pipeline: missing string field 'objective'");
  }
  CalibrationPipeline pipeline;
  pipeline.objective.kind = ParseObjectiveKind(doc.at("objective").get<std::string>());
  pipeline.objective.tau = RequireUnitInterval(doc, "tau", "pipeline");
  if (pipeline.objective.tau >= 1.0) throw ValidationError("pipeline: 'tau' must be below 1");
  if (pipeline.objective.kind == ObjectiveKind::kLaEce0 && pipeline.objective.tau != 0.0) {
    throw ValidationError("pipeline: the laece0 objective uses tau = 0");
  }
  if (doc.contains("calibrator") && doc.at("calibrator").is_string()) {
    pipeline.calibrator = ParseCalibratorKind(doc.at("calibrator").get<std::string>());
  }
  if (!doc.contains("classes") || !doc.at("classes").is_array()) {
    throw ValidationError("pipeline: missing array field 'classes'");
  }
  const nlohmann::json& classes = doc.at("classes");
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const nlohmann::json& item = classes[k];
    const std::string where = "pipeline: class entry " + std::to_string(k);
    if (!item.is_object() || !item.contains("id") || !item.at("id").is_number_integer()) {
      throw ValidationError(where + ": missing integer field 'id'");
    }
    ClassCalibrator entry;
    entry.class_id = item.at("id").get<ClassId>();
    entry.u_threshold = RequireUnitInterval(item, "u_thr", where);
    entry.v_threshold = RequireUnitInterval(item, "v_thr", where);
    if (!item.contains("model")) throw ValidationError(where + ": missing field 'model'");
    try {
      entry.model = ModelFromJson(item.at("model"));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!pipeline.classes.emplace(entry.class_id, entry).second) {
      throw ValidationError(where + ": duplicate class id " + std::to_string(entry.class_id));
    }
  }
  return pipeline;
}

void SavePipeline(const CalibrationPipeline& pipeline, const std::filesystem::path& path) {
  WriteJsonFile(PipelineToJson(pipeline), path);
}

CalibrationPipeline LoadPipeline(const std::filesystem::path& path) {
  const nlohmann::json doc = ReadJsonFile(path);
  try {
    return PipelineFromJson(doc);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace detcal
