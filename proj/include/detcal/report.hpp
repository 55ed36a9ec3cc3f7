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
#ifndef DETCAL_REPORT_HPP_
#define DETCAL_REPORT_HPP_

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detcal/accuracy.hpp"
#include "detcal/calmetrics.hpp"
#include "detcal/dataset.hpp"

namespace detcal {

struct EvaluationOptions {
  double tau = 0.0;          // LRP
  double legacy_tau = 0.5;   // AP, D-ECE and LaECE
  int d_ece_bins = kDefaultDEceBins;
  int la_ece_bins = kDefaultLaEceBins;  // LaECE and LaECE0
};

// A measure value, or the reason it is undefined on the input.
struct MetricValue {
  std::optional<double> value;
  std::string reason;
};

// LRP at options.tau and AP at options.legacy_tau, both class means over
// classes with objects; D-ECE and LaECE at options.legacy_tau; LaECE0 and
// LaACE0 at tau 0.
struct EvaluationSummary {
  std::optional<LrpResult> lrp;
  ClassLrp class_lrp;
  ApResult ap;
  MetricValue d_ece;
  MetricValue la_ece;
  MetricValue la_ece0;
  MetricValue la_ace0;
  // Per-class values of the class-wise calibration measures.
  std::map<ClassId, double> la_ece_per_class;
  std::map<ClassId, double> la_ece0_per_class;
  std::map<ClassId, double> la_ace0_per_class;
};

EvaluationSummary Evaluate(const Dataset& dataset, const EvaluationOptions& options = {});

// {0, step, 2 step, ...} up to 1, with 1 appended when step does not divide
// it. Throws ValidationError unless 0 < step <= 1.
std::vector<double> SweepGrid(double step);

struct SweepRow {
  double threshold = 0.0;
  MetricValue d_ece;
  MetricValue la_ece;
  MetricValue la_ece0;
  MetricValue la_ace0;
  std::optional<double> lrp;
  std::optional<double> ap;
};

// Evaluates the dataset after thresholding every class at each grid value.
std::vector<SweepRow> ThresholdSweep(const Dataset& dataset, double step, const EvaluationOptions& options = {});

// Header threshold,d_ece,la_ece,la_ece0,la_ace0,lrp,ap; undefined values
// are empty fields.
void WriteSweepCsv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace detcal

#endif  // DETCAL_REPORT_HPP_
