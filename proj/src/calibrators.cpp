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
#include "detcal/calibrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "detcal/error.hpp"
#include "detcal/optimization.hpp"
#include "detcal/simd/kernels.hpp"

namespace detcal {
namespace {

constexpr double kLogTemperatureBound = 5.0;
constexpr double kLogTemperatureTolerance = 1e-10;

struct LogisticData {
  std::vector<double> logits;
  std::vector<double> targets;
};

LogisticData ToLogisticData(std::span<const CalibrationTargetPair> pairs) {
  LogisticData data;
  data.logits.reserve(pairs.size());
  data.targets.reserve(pairs.size());
  for (const CalibrationTargetPair& pair : pairs) {
    if (!(pair.target >= 0.0 && pair.target <= 1.0)) {
      throw ValidationError("calibration target outside [0, 1]");
    }
    data.logits.push_back(ClampedLogit(pair.confidence));
    data.targets.push_back(pair.target);
  }
  return data;
}

// Logistic fits need at least two distinct confidences to identify a slope.
bool LogisticFitIsIdentified(std::span<const CalibrationTargetPair> pairs) {
  if (pairs.size() < 2) return false;
  return std::any_of(pairs.begin(), pairs.end(), [&](const CalibrationTargetPair& pair) {
    return pair.confidence != pairs.front().confidence;
  });
}

double RequireNumber(const nlohmann::json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key) || !doc.at(key).is_number()) {
    throw ValidationError(std::string("calibrator: missing numeric field '") + key + "'");
  }
  return doc.at(key).get<double>();
}

std::vector<double> RequireNumberArray(const nlohmann::json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key) || !doc.at(key).is_array()) {
    throw ValidationError(std::string("calibrator: missing array field '") + key + "'");
  }
  std::vector<double> values;
  for (const nlohmann::json& v : doc.at(key)) {
    if (!v.is_number()) throw ValidationError(std::string("calibrator: non-numeric entry in '") + key + "'");
    values.push_back(v.get<double>());
  }
  return values;
}

void ValidateIsotonic(const IsotonicModel& model) {
  if (model.x.empty() || model.x.size() != model.y.size()) {
    throw ValidationError("calibrator: isotonic knots must be non-empty with equal x and y lengths");
  }
  for (std::size_t i = 0; i < model.x.size(); ++i) {
    if (!(model.y[i] >= 0.0 && model.y[i] <= 1.0)) {
      throw ValidationError("calibrator: isotonic knot value outside [0, 1]");
    }
    if (i > 0 && !(model.x[i - 1] < model.x[i])) {
      throw ValidationError("calibrator: isotonic knot x must be strictly ascending");
    }
    if (i > 0 && !(model.y[i - 1] <= model.y[i])) {
      throw ValidationError("calibrator: isotonic knot y must be nondecreasing");
    }
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string ToString(CalibratorKind kind) {
  switch (kind) {
    case CalibratorKind::kTemperature:
      return "ts";
    case CalibratorKind::kPlatt:
      return "platt";
    case CalibratorKind::kIsotonic:
      return "ir";
  }
  return "unknown";
}

CalibratorKind ParseCalibratorKind(const std::string& name) {
  if (name == "ts") return CalibratorKind::kTemperature;
  if (name == "platt") return CalibratorKind::kPlatt;
  if (name == "ir") return CalibratorKind::kIsotonic;
  throw ValidationError("unknown calibrator kind '" + name + "' (expected ts, platt or ir)");
}

std::string ModelKindName(const CalibratorModel& model) {
  return std::visit(Overloaded{
                        [](const IdentityModel&) { return std::string("identity"); },
                        [](const TemperatureModel&) { return std::string("temperature"); },
                        [](const PlattModel&) { return std::string("platt"); },
                        [](const IsotonicModel&) { return std::string("isotonic"); },
                    },
                    model);
}

double ClampedLogit(double p) {
  const double q = std::clamp(p, kConfidenceClamp, 1.0 - kConfidenceClamp);
  return std::log(q) - std::log1p(-q);
}

double Sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double Apply(const CalibratorModel& model, double p) {
  return std::visit(Overloaded{
                        [&](const IdentityModel&) { return p; },
                        [&](const TemperatureModel& m) { return Sigmoid(ClampedLogit(p) / m.temperature); },
                        [&](const PlattModel& m) { return Sigmoid(m.a * ClampedLogit(p) + m.b); },
                        [&](const IsotonicModel& m) {
                          const auto it = std::upper_bound(m.x.begin(), m.x.end(), p);
                          if (it == m.x.begin()) return m.y.front();
                          if (it == m.x.end()) return m.y.back();
                          const std::size_t k = static_cast<std::size_t>(it - m.x.begin());
                          const double x0 = m.x[k - 1];
                          const double x1 = m.x[k];
                          const double y0 = m.y[k - 1];
                          const double y1 = m.y[k];
                          return y0 + (y1 - y0) * ((p - x0) / (x1 - x0));
                        },
                    },
                    model);
}

NllValue PlattNll(std::span<const CalibrationTargetPair> pairs, double a, double b) {
  const LogisticData data = ToLogisticData(pairs);
  const simd::LogisticLoss loss = simd::LogisticNll(data.logits, data.targets, a, b);
  return NllValue{loss.loss, loss.grad_scale, loss.grad_shift};
}

double TemperatureNll(std::span<const CalibrationTargetPair> pairs, double temperature) {
  const LogisticData data = ToLogisticData(pairs);
  return simd::LogisticNll(data.logits, data.targets, 1.0 / temperature, 0.0).loss;
}

CalibratorModel FitPlatt(std::span<const CalibrationTargetPair> pairs) {
  if (!LogisticFitIsIdentified(pairs)) return IdentityModel{};
  const LogisticData data = ToLogisticData(pairs);
  const GradientObjective objective = [&](std::span<const double> x, std::span<double> grad) {
    const simd::LogisticLoss loss = simd::LogisticNll(data.logits, data.targets, x[0], x[1]);
    grad[0] = loss.grad_scale;
    grad[1] = loss.grad_shift;
    return loss.loss;
  };
  LbfgsOptions options;
  options.lower_bounds = {0.0, -std::numeric_limits<double>::infinity()};
  const OptimizeResult result = Lbfgs(objective, {1.0, 0.0}, options);
  return PlattModel{std::max(result.parameters[0], 0.0), result.parameters[1]};
}

CalibratorModel FitTemperature(std::span<const CalibrationTargetPair> pairs) {
  if (!LogisticFitIsIdentified(pairs)) return IdentityModel{};
  const LogisticData data = ToLogisticData(pairs);
  const auto objective = [&](double log_t) {
    const double loss = simd::LogisticNll(data.logits, data.targets, std::exp(-log_t), 0.0).loss;
    if (!std::isfinite(loss)) throw OptimizationError("temperature loss not finite", {log_t});
    return loss;
  };
  const OptimizeResult result =
      GoldenSection(objective, -kLogTemperatureBound, kLogTemperatureBound, kLogTemperatureTolerance);
  return TemperatureModel{std::exp(result.parameters[0])};
}

CalibratorModel FitIsotonic(std::span<const CalibrationTargetPair> pairs) {
  if (pairs.empty()) throw ValidationError("isotonic fit needs at least one pair");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return pairs[l].confidence < pairs[r].confidence;
  });
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;
  for (std::size_t begin = 0; begin < order.size();) {
    const double confidence = pairs[order[begin]].confidence;
    std::size_t end = begin;
    double sum = 0.0;
    while (end < order.size() && pairs[order[end]].confidence == confidence) {
      const double target = pairs[order[end]].target;
      if (!(target >= 0.0 && target <= 1.0)) throw ValidationError("calibration target outside [0, 1]");
      sum += target;
      ++end;
    }
    const double count = static_cast<double>(end - begin);
    x.push_back(confidence);
    y.push_back(sum / count);
    w.push_back(count);
    begin = end;
  }
  IsotonicModel model;
  model.y = Pava(x, y, w);
  for (double& v : model.y) v = std::clamp(v, 0.0, 1.0);
  model.x = std::move(x);
  return model;
}

CalibratorModel Fit(CalibratorKind kind, std::span<const CalibrationTargetPair> pairs) {
  switch (kind) {
    case CalibratorKind::kTemperature:
      return FitTemperature(pairs);
    case CalibratorKind::kPlatt:
      return FitPlatt(pairs);
    case CalibratorKind::kIsotonic:
      return FitIsotonic(pairs);
  }
  throw std::invalid_argument("unknown calibrator kind");
}

nlohmann::json ModelToJson(const CalibratorModel& model) {
  nlohmann::json doc = {{"kind", ModelKindName(model)}};
  std::visit(Overloaded{
                 [&](const IdentityModel&) {},
                 [&](const TemperatureModel& m) { doc["params"] = {{"temperature", m.temperature}}; },
                 [&](const PlattModel& m) { doc["params"] = {{"a", m.a}, {"b", m.b}}; },
                 [&](const IsotonicModel& m) { doc["knots"] = {{"x", m.x}, {"y", m.y}}; },
             },
             model);
  return doc;
}

CalibratorModel ModelFromJson(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string()) {
    throw ValidationError("calibrator: missing string field 'kind'");
  }
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "identity") return IdentityModel{};
  if (kind == "temperature") {
    const double t = RequireNumber(doc.value("params", nlohmann::json::object()), "temperature");
    if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("calibrator: temperature must be positive");
    return TemperatureModel{t};
  }
  if (kind == "platt") {
    const nlohmann::json params = doc.value("params", nlohmann::json::object());
    const double a = RequireNumber(params, "a");
    const double b = RequireNumber(params, "b");
    if (!(a >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
      throw ValidationError("calibrator: platt needs finite a >= 0 and finite b");
    }
    return PlattModel{a, b};
  }
  if (kind == "isotonic") {
    const nlohmann::json knots = doc.value("knots", nlohmann::json::object());
    IsotonicModel model{RequireNumberArray(knots, "x"), RequireNumberArray(knots, "y")};
    ValidateIsotonic(model);
    return model;
  }
  throw ValidationError("calibrator: unknown kind '" + kind + "'");
}

}  // namespace detcal
