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
#ifndef DETCAL_ACCURACY_HPP_
#define DETCAL_ACCURACY_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "detcal/dataset.hpp"
#include "detcal/matching.hpp"

namespace detcal {

// Localisation-Recall-Precision error and its components.
struct LrpResult {
  double lrp = 0.0;
  double lrp_loc = 0.0;  // mean localisation error of TPs, 0 when there are none
  double lrp_fp = 0.0;   // N_FP / |detections|, 0 when there are no detections
  double lrp_fn = 0.0;   // N_FN / |objects|, 0 when there are no objects
  std::size_t n_tp = 0;
  std::size_t n_fp = 0;
  std::size_t n_fn = 0;
  double total_loc_error = 0.0;
  bool defined = false;      // false iff N_TP + N_FP + N_FN == 0 (lrp is NaN)
  bool loc_defined = false;  // false iff N_TP == 0
};

// LRP from counts. total_loc_error is the sum of (1 - IoU) / (1 - tau) over
// the TPs.
LrpResult LrpFromCounts(std::size_t n_tp, std::size_t n_detections, std::size_t n_objects,
                        double total_loc_error);

// Recombines the components with weights (N_TP, |detections|, |objects|).
double LrpFromComponents(const LrpResult& r);

// Pooled LRP over all detections and objects of the dataset. Throws
// ValidationError if matches were computed at a different tau.
LrpResult Lrp(const Dataset& dataset, const MatchResult& matches, double tau);

struct ClassLrp {
  std::map<ClassId, LrpResult> per_class;  // every registry class
  // Means over classes with at least one object; empty when there is none.
  std::optional<LrpResult> mean;
};

ClassLrp LrpPerClass(const Dataset& dataset, const MatchResult& matches, double tau);

// COCO recall grid {0, 0.01, ..., 1}, generated like numpy.linspace.
inline constexpr int kRecallPoints = 101;
std::vector<double> RecallGrid();

struct ApResult {
  std::map<ClassId, double> per_class;  // classes with at least one object
  std::optional<double> mean;
};

// 101-point interpolated AP per class over the given detections.
ApResult AveragePrecision(const Dataset& dataset, const MatchResult& matches);

struct OptimalThreshold {
  double threshold = 0.0;
  std::optional<double> lrp;  // class LRP at the threshold; empty if undefined
};

// Per-class LRP-optimal score threshold. Candidates are 0 and every distinct
// detection score of the class (inclusive filter score >= t); ties go to the
// larger threshold. Classes without detections get 0.
std::map<ClassId, OptimalThreshold> LrpOptimalThresholds(const Dataset& dataset, double tau);

ClassThresholds ThresholdsOnly(const std::map<ClassId, OptimalThreshold>& choice);

}  // namespace detcal

#endif  // DETCAL_ACCURACY_HPP_
