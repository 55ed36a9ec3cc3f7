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
#ifndef DETCAL_CALIBRATORS_HPP_
#define DETCAL_CALIBRATORS_HPP_

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace detcal {

// Confidences are clamped to [kConfidenceClamp, 1 - kConfidenceClamp] before
// taking the logit.
inline constexpr double kConfidenceClamp = 1e-7;

struct IdentityModel {
  friend bool operator==(const IdentityModel&, const IdentityModel&) = default;
};

// p -> sigmoid(logit(p) / temperature), temperature > 0.
struct TemperatureModel {
  double temperature = 1.0;
  friend bool operator==(const TemperatureModel&, const TemperatureModel&) = default;
};

// p -> sigmoid(a * logit(p) + b), a >= 0.
struct PlattModel {
  double a = 1.0;
  double b = 0.0;
  friend bool operator==(const PlattModel&, const PlattModel&) = default;
};

// Piecewise-linear interpolation through the knots, constant outside them.
// x strictly ascending, y nondecreasing in [0, 1].
struct IsotonicModel {
  std::vector<double> x;
  std::vector<double> y;
  friend bool operator==(const IsotonicModel&, const IsotonicModel&) = default;
};

using CalibratorModel = std::variant<IdentityModel, TemperatureModel, PlattModel, IsotonicModel>;

enum class CalibratorKind { kTemperature, kPlatt, kIsotonic };

// "ts", "platt", "ir".
std::string ToString(CalibratorKind kind);
CalibratorKind ParseCalibratorKind(const std::string& name);

// "identity", "temperature", "platt", "isotonic".
std::string ModelKindName(const CalibratorModel& model);

// Calibrated confidence; nondecreasing in p for every model.
double Apply(const CalibratorModel& model, double p);

double ClampedLogit(double p);
double Sigmoid(double u);

struct CalibrationTargetPair {
  double confidence = 0.0;
  double target = 0.0;
};

// Summed cross-entropy of sigmoid(a * logit(p) + b) against the targets,
// with its gradient in (a, b).
struct NllValue {
  double value = 0.0;
  double grad_a = 0.0;
  double grad_b = 0.0;
};
NllValue PlattNll(std::span<const CalibrationTargetPair> pairs, double a, double b);
double TemperatureNll(std::span<const CalibrationTargetPair> pairs, double temperature);

// The logistic fits fall back to the identity with fewer than two pairs or
// when every confidence is equal. Throw OptimizationError when the loss
// stops being finite.
CalibratorModel FitPlatt(std::span<const CalibrationTargetPair> pairs);
CalibratorModel FitTemperature(std::span<const CalibrationTargetPair> pairs);
// Requires at least one pair. Pairs sharing a confidence are averaged first.
CalibratorModel FitIsotonic(std::span<const CalibrationTargetPair> pairs);

CalibratorModel Fit(CalibratorKind kind, std::span<const CalibrationTargetPair> pairs);

// {"kind": ..., "params": {...}} or {"kind": "isotonic", "knots": {"x": [...], "y": [...]}}.
nlohmann::json ModelToJson(const CalibratorModel& model);
// Throws ValidationError on malformed documents or broken invariants.
CalibratorModel ModelFromJson(const nlohmann::json& doc);

}  // namespace detcal

#endif  // DETCAL_CALIBRATORS_HPP_
