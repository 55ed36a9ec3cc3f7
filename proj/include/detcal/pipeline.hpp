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
#ifndef DETCAL_PIPELINE_HPP_
#define DETCAL_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "detcal/calibrators.hpp"
#include "detcal/dataset.hpp"
#include "json.hpp"

namespace detcal {

// Pre-threshold used by the binary-target objective.
inline constexpr double kDEceFixedThreshold = 0.30;

enum class ObjectiveKind { kLaEce0, kDEce };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::kLaEce0;
  // TP-validation threshold for target construction and the operating
  // threshold search; always 0 for kLaEce0.
  double tau = 0.0;

  static Objective LaEce0() { return Objective{ObjectiveKind::kLaEce0, 0.0}; }
  static Objective DEce(double tau = 0.5) { return Objective{ObjectiveKind::kDEce, tau}; }

  friend bool operator==(const Objective&, const Objective&) = default;
};

// "laece0" or "dece".
std::string ToString(ObjectiveKind kind);
ObjectiveKind ParseObjectiveKind(const std::string& name);

struct ClassCalibrator {
  ClassId class_id = 0;
  double u_threshold = 0.0;  // applied to raw scores
  double v_threshold = 0.0;  // applied to calibrated scores
  CalibratorModel model = IdentityModel{};

  friend bool operator==(const ClassCalibrator&, const ClassCalibrator&) = default;
};

struct CalibrationPipeline {
  Objective objective;
  CalibratorKind calibrator = CalibratorKind::kIsotonic;
  std::map<ClassId, ClassCalibrator> classes;  // every registry class

  // The entry for a class, identity with zero thresholds when absent.
  ClassCalibrator For(ClassId class_id) const;

  friend bool operator==(const CalibrationPipeline&, const CalibrationPipeline&) = default;
};

// Fits calibration thresholds, class-wise calibrators and operating
// thresholds on a validation set (callers apply the top-k cap first).
//
// kLaEce0: calibration thresholds are LRP-optimal at tau 0; targets are the
// IoU under tau-0 matching of the thresholded set (0 for FPs).
// kDEce: every class is pre-thresholded at kDEceFixedThreshold and a single
// class-agnostic calibrator is fitted on binary TP/FP targets at the
// objective's tau, then shared by all classes.
//
// Operating thresholds are LRP-optimal at the objective's tau on the
// calibrated survivors. Classes left without detections keep the identity
// and zero thresholds. Throws ValidationError without detections.
CalibrationPipeline TrainPipeline(const Dataset& val, const Objective& objective, CalibratorKind kind);

// Drops raw scores below u, calibrates, then drops calibrated scores below v.
// Classes absent from the pipeline are passed through unchanged and, when
// missing is non-null, reported there.
Dataset ApplyPipeline(const CalibrationPipeline& pipeline, const Dataset& test,
                      std::set<ClassId>* missing = nullptr);

nlohmann::json PipelineToJson(const CalibrationPipeline& pipeline);
CalibrationPipeline PipelineFromJson(const nlohmann::json& doc);
void SavePipeline(const CalibrationPipeline& pipeline, const std::filesystem::path& path);
CalibrationPipeline LoadPipeline(const std::filesystem::path& path);

}  // namespace detcal

#endif  // DETCAL_PIPELINE_HPP_
